#include "uniest/errors.hpp"
#include "uniest/harness.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace uniest {

void Table::add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw std::invalid_argument("row width does not match columns");
    for (std::size_t c = 0; c < row.size(); ++c) {
        const auto& cell = row[c];
        if (std::holds_alternative<std::monostate>(cell)) continue;
        const bool ok = (columns[c].type == ColumnType::Integer && std::holds_alternative<std::int64_t>(cell)) ||
                        (columns[c].type == ColumnType::Real && std::holds_alternative<double>(cell)) ||
                        (columns[c].type == ColumnType::Text && std::holds_alternative<std::string>(cell));
        if (!ok) throw std::invalid_argument("cell type does not match column '" + columns[c].name + "'");
    }
    rows.push_back(std::move(row));
}

std::string format_cell(const Cell& cell) {
    struct Visitor {
        std::string operator()(std::monostate) const { return {}; }
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
        std::string operator()(double v) const {
            char buf[48];
            std::snprintf(buf, sizeof buf, "%.9g", v);
            return buf;
        }
        std::string operator()(const std::string& v) const {
            if (v.find_first_of(",\"\n") != std::string::npos) throw std::invalid_argument("text cell contains CSV metacharacters");
            return v;
        }
    };
    return std::visit(Visitor{}, cell);
}

std::string to_csv(const Table& table) {
    std::string out;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c) out += ',';
        out += table.columns[c].name;
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += format_cell(row[c]);
        }
        out += '\n';
    }
    return out;
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

Cell parse_cell(const std::string& text, const Column& column) {
    if (text.empty()) return std::monostate{};
    errno = 0;
    char* end = nullptr;
    switch (column.type) {
    case ColumnType::Integer: {
        const long long v = std::strtoll(text.c_str(), &end, 10);
        if (*end != '\0' || errno) throw std::invalid_argument("bad integer '" + text + "' in " + column.name);
        return static_cast<std::int64_t>(v);
    }
    case ColumnType::Real: {
        const double v = std::strtod(text.c_str(), &end);
        if (*end != '\0') throw std::invalid_argument("bad number '" + text + "' in " + column.name);
        return v;
    }
    case ColumnType::Text:
        return text;
    }
    return std::monostate{};
}

} // namespace

Table parse_csv(const std::string& text, const std::vector<Column>& schema) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("CSV has no header");
    const auto header = split(line);
    if (header.size() != schema.size()) throw std::invalid_argument("CSV header does not match schema");
    for (std::size_t c = 0; c < schema.size(); ++c) {
        if (header[c] != schema[c].name) throw std::invalid_argument("CSV column '" + header[c] + "' not in schema");
    }
    Table t{schema, {}};
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split(line);
        if (fields.size() != schema.size()) throw std::invalid_argument("CSV row has wrong width");
        std::vector<Cell> row;
        row.reserve(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) row.push_back(parse_cell(fields[c], schema[c]));
        t.rows.push_back(std::move(row));
    }
    return t;
}

void emit_csv(const Table& table, const std::filesystem::path& path, const nlohmann::json& metadata) {
    if (table.rows.empty()) throw std::invalid_argument("emit_csv: no rows to write");
    const std::string body = to_csv(table);

    nlohmann::json meta = metadata;
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : table.columns) cols.push_back(c.name);
    meta["columns"] = cols;
    meta["rows"] = table.rows.size();

    auto write = [](const std::filesystem::path& p, const std::string& content) {
        std::ofstream f(p, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open '" + p.string() + "' for writing");
        f << content;
        if (!f.flush()) throw IoError("failed writing '" + p.string() + "'");
    };
    write(path, body);
    write(path.string() + ".meta.json", meta.dump(2) + "\n");
}

} // namespace uniest
