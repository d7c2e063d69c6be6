#include "uniest/channel.hpp"

#include "uniest/errors.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace uniest {

SystemOperator::SystemOperator(OperatorKind kind, std::size_t n, std::size_t m) : kind_(kind), n_(n), m_(m) {}

SystemOperator SystemOperator::identity(std::size_t n) {
    if (n == 0) throw std::invalid_argument("identity operator needs n >= 1");
    return SystemOperator(OperatorKind::Identity, n, n);
}

SystemOperator SystemOperator::matrix(Eigen::MatrixXd J) {
    if (J.rows() == 0 || J.cols() == 0) throw std::invalid_argument("operator matrix is empty");
    if (!J.allFinite()) throw std::invalid_argument("operator matrix has non-finite entries");
    SystemOperator op(OperatorKind::Matrix, static_cast<std::size_t>(J.cols()), static_cast<std::size_t>(J.rows()));
    op.J_ = std::make_shared<const Eigen::MatrixXd>(std::move(J));
    return op;
}

SystemOperator SystemOperator::map(std::size_t n, std::size_t m, MapFn fn) {
    if (n == 0 || m == 0) throw std::invalid_argument("map operator needs positive dimensions");
    if (!fn) throw std::invalid_argument("map operator needs a function");
    SystemOperator op(OperatorKind::Map, n, m);
    op.fn_ = std::move(fn);
    return op;
}

const Eigen::MatrixXd& SystemOperator::matrix() const {
    if (kind_ != OperatorKind::Matrix) throw InvalidOperation("operator has no matrix");
    return *J_;
}

std::vector<double> SystemOperator::apply(std::span<const double> x) const {
    if (x.size() != n_) throw std::invalid_argument("operator input has wrong length");
    switch (kind_) {
    case OperatorKind::Identity:
        return {x.begin(), x.end()};
    case OperatorKind::Matrix: {
        std::vector<double> w(m_);
        Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(m_)) =
            *J_ * Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(n_));
        return w;
    }
    case OperatorKind::Map: {
        auto w = fn_(x);
        if (w.size() != m_) throw std::invalid_argument("map operator returned wrong length");
        return w;
    }
    }
    return {};
}

std::vector<double> apply_operator(const SystemOperator& op, std::span<const double> x) { return op.apply(x); }

AwgnNoise::AwgnNoise(double variance) : variance_(variance) {
    if (!(variance > 0.0) || !std::isfinite(variance)) {
        throw std::invalid_argument("noise variance must be positive and finite");
    }
}

double AwgnNoise::log_pdf(double r) const {
    return -0.5 * std::log(2.0 * std::numbers::pi * variance_) - r * r / (2.0 * variance_);
}

ChannelModel::ChannelModel(SystemOperator op, std::shared_ptr<const NoiseModel> noise, std::vector<double> y)
    : op_(std::move(op)), noise_(std::move(noise)), y_(std::move(y)) {
    if (!noise_) throw std::invalid_argument("channel needs a noise model");
    if (y_.size() != op_.output_size()) throw std::invalid_argument("measurement length does not match operator");
    for (double v : y_) {
        if (!std::isfinite(v)) throw std::invalid_argument("measurements must be finite");
    }
}

ChannelModel ChannelModel::awgn(SystemOperator op, std::vector<double> y, double variance) {
    return ChannelModel(std::move(op), std::make_shared<AwgnNoise>(variance), std::move(y));
}

ChannelModel ChannelModel::lossy(std::vector<double> source, double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be positive");
    const auto n = source.size();
    return awgn(SystemOperator::identity(n), std::move(source), 1.0 / (2.0 * lambda));
}

std::vector<double> residual(const ChannelModel& ch, std::span<const double> x) {
    auto w = ch.op().apply(x);
    const auto y = ch.measurements();
    for (std::size_t m = 0; m < w.size(); ++m) w[m] = y[m] - w[m];
    return w;
}

double log_likelihood_from_residual(const ChannelModel& ch, std::span<const double> r) {
    if (r.size() != ch.output_size()) throw std::invalid_argument("residual has wrong length");
    double total;
    if (auto var = ch.noise().gaussian_variance()) {
        double sumsq = 0.0;
        for (double v : r) sumsq += v * v;
        total = -0.5 * static_cast<double>(r.size()) * std::log(2.0 * std::numbers::pi * *var) - sumsq / (2.0 * *var);
    } else {
        total = 0.0;
        for (double v : r) total += ch.noise().log_pdf(v);
    }
    if (!std::isfinite(total)) throw NumericError("log-likelihood is not finite");
    return total;
}

double log_likelihood(const ChannelModel& ch, std::span<const double> x) {
    return log_likelihood_from_residual(ch, residual(ch, x));
}

LikelihoodUpdate delta_log_likelihood(const ChannelModel& ch, std::span<const double> r, std::size_t n,
                                      double old_value, double new_value) {
    if (n >= ch.input_size()) throw std::invalid_argument("coordinate out of range");
    if (r.size() != ch.output_size()) throw std::invalid_argument("residual has wrong length");
    std::vector<double> out(r.begin(), r.end());
    const double delta = new_value - old_value;
    switch (ch.op().kind()) {
    case OperatorKind::Identity:
        out[n] -= delta;
        break;
    case OperatorKind::Matrix: {
        const auto col = ch.op().matrix().col(static_cast<Eigen::Index>(n));
        for (std::size_t m = 0; m < out.size(); ++m) out[m] -= col(static_cast<Eigen::Index>(m)) * delta;
        break;
    }
    case OperatorKind::Map:
        throw InvalidOperation("delta_log_likelihood needs a linear operator; use ResidualCache");
    }
    return {log_likelihood_from_residual(ch, out), std::move(out)};
}

ResidualCache::ResidualCache(const ChannelModel& ch, std::span<const double> x)
    : ch_(&ch), x_(x.begin(), x.end()), variance_(ch.noise().gaussian_variance()) {
    if (x.size() != ch.input_size()) throw std::invalid_argument("estimate has wrong length");
    if (variance_) {
        norm_const_ = -0.5 * static_cast<double>(ch.output_size()) * std::log(2.0 * std::numbers::pi * *variance_);
    }
    if (ch.op().kind() == OperatorKind::Matrix) {
        const auto& J = ch.op().matrix();
        col_sqnorm_.resize(x_.size());
        for (std::size_t n = 0; n < x_.size(); ++n) col_sqnorm_[n] = J.col(static_cast<Eigen::Index>(n)).squaredNorm();
    }
    refresh();
}

double ResidualCache::gaussian_loglik(double sumsq) const { return norm_const_ - sumsq / (2.0 * *variance_); }

double ResidualCache::sum_log_pdf() const {
    double total = 0.0;
    for (double v : r_) total += ch_->noise().log_pdf(v);
    return total;
}

void ResidualCache::refresh() {
    r_ = uniest::residual(*ch_, x_);
    if (variance_) {
        sumsq_ = 0.0;
        for (double v : r_) sumsq_ += v * v;
        loglik_ = gaussian_loglik(sumsq_);
    } else {
        loglik_ = sum_log_pdf();
    }
    if (!std::isfinite(loglik_)) throw NumericError("log-likelihood is not finite");
}

void ResidualCache::reset(std::span<const double> x) {
    if (x.size() != x_.size()) throw std::invalid_argument("estimate has wrong length");
    x_.assign(x.begin(), x.end());
    refresh();
}

void ResidualCache::focus(std::size_t n) {
    if (n >= x_.size()) throw std::invalid_argument("coordinate out of range");
    focus_ = n;
    if (ch_->op().kind() == OperatorKind::Matrix && variance_) {
        focus_dot_ = ch_->op().matrix().col(static_cast<Eigen::Index>(n)).dot(
            Eigen::Map<const Eigen::VectorXd>(r_.data(), static_cast<Eigen::Index>(r_.size())));
    }
}

double ResidualCache::probe(double delta) const {
    if (delta == 0.0) return loglik_;
    const std::size_t n = focus_;
    switch (ch_->op().kind()) {
    case OperatorKind::Identity:
        if (variance_) {
            const double rn = r_[n] - delta;
            return gaussian_loglik(sumsq_ - r_[n] * r_[n] + rn * rn);
        }
        return loglik_ - ch_->noise().log_pdf(r_[n]) + ch_->noise().log_pdf(r_[n] - delta);
    case OperatorKind::Matrix: {
        if (variance_) {
            return gaussian_loglik(sumsq_ - 2.0 * delta * focus_dot_ + delta * delta * col_sqnorm_[n]);
        }
        const auto col = ch_->op().matrix().col(static_cast<Eigen::Index>(n));
        double change = 0.0;
        for (std::size_t m = 0; m < r_.size(); ++m) {
            const double rm = r_[m];
            change += ch_->noise().log_pdf(rm - col(static_cast<Eigen::Index>(m)) * delta) - ch_->noise().log_pdf(rm);
        }
        return loglik_ + change;
    }
    case OperatorKind::Map: {
        scratch_.assign(x_.begin(), x_.end());
        scratch_[n] += delta;
        return uniest::log_likelihood(*ch_, scratch_);
    }
    }
    return loglik_;
}

void ResidualCache::commit(std::size_t n, double delta) {
    if (n >= x_.size()) throw std::invalid_argument("coordinate out of range");
    if (delta == 0.0) return;
    x_[n] += delta;
    switch (ch_->op().kind()) {
    case OperatorKind::Identity: {
        const double old = r_[n];
        r_[n] -= delta;
        if (variance_) {
            sumsq_ += r_[n] * r_[n] - old * old;
            loglik_ = gaussian_loglik(sumsq_);
        } else {
            loglik_ += ch_->noise().log_pdf(r_[n]) - ch_->noise().log_pdf(old);
        }
        return;
    }
    case OperatorKind::Matrix: {
        const auto col = ch_->op().matrix().col(static_cast<Eigen::Index>(n));
        double sumsq = 0.0;
        for (std::size_t m = 0; m < r_.size(); ++m) {
            r_[m] -= col(static_cast<Eigen::Index>(m)) * delta;
            sumsq += r_[m] * r_[m];
        }
        if (variance_) {
            sumsq_ = sumsq;
            loglik_ = gaussian_loglik(sumsq_);
        } else {
            loglik_ = sum_log_pdf();
        }
        return;
    }
    case OperatorKind::Map:
        refresh();
        return;
    }
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& J) {
    char buf[64];
    for (Eigen::Index i = 0; i < J.rows(); ++i) {
        for (Eigen::Index j = 0; j < J.cols(); ++j) {
            std::snprintf(buf, sizeof buf, j == 0 ? "%.17g" : " %.17g", J(i, j));
            out << buf;
        }
        out << '\n';
    }
}

Eigen::MatrixXd read_matrix(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::vector<double> row;
        std::string tok;
        while (ls >> tok) {
            try {
                row.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw std::invalid_argument("read_matrix: bad entry '" + tok + "'");
            }
        }
        if (row.empty()) continue;
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw std::invalid_argument("read_matrix: ragged rows");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument("read_matrix: empty input");
    Eigen::MatrixXd J(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return J;
}

void write_vector(std::ostream& out, std::span<const double> v) {
    char buf[64];
    for (double x : v) {
        std::snprintf(buf, sizeof buf, "%.17g\n", x);
        out << buf;
    }
}

std::vector<double> read_vector(std::istream& in) {
    std::vector<double> v;
    std::string tok;
    while (in >> tok) {
        try {
            v.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw std::invalid_argument("read_vector: bad entry '" + tok + "'");
        }
    }
    return v;
}

} // namespace uniest
