#include "uniest/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <map>
#include <numbers>
#include <stdexcept>

namespace uniest {

namespace {

using Vec = Eigen::VectorXd;

Eigen::Map<const Vec> view(std::span<const double> v) {
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double objective(const Eigen::MatrixXd& J, const Vec& y, const Vec& x, double lambda) {
    return 0.5 * (y - J * x).squaredNorm() + lambda * x.lpNorm<1>();
}

} // namespace

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

double lasso_objective(const Eigen::MatrixXd& J, std::span<const double> y, std::span<const double> x, double lambda) {
    return objective(J, view(y), view(x), lambda);
}

double lipschitz_constant(const Eigen::MatrixXd& J, std::size_t max_iterations, double tolerance) {
    if (J.cols() == 0) return 0.0;
    Vec v = Vec::Ones(J.cols()) / std::sqrt(static_cast<double>(J.cols()));
    double eig = 0.0;
    for (std::size_t k = 0; k < max_iterations; ++k) {
        Vec w = J.transpose() * (J * v);
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        const double next = v.dot(w);
        v = w / norm;
        if (std::abs(next - eig) <= tolerance * std::max(1.0, next)) {
            eig = next;
            break;
        }
        eig = next;
    }
    return eig;
}

FistaResult fista(const Eigen::MatrixXd& J, std::span<const double> y_in, double lambda, const FistaOptions& opts) {
    if (!(lambda > 0.0)) throw std::invalid_argument("fista: lambda must be positive");
    if (static_cast<std::size_t>(J.rows()) != y_in.size()) throw std::invalid_argument("fista: dimension mismatch");
    if (J.isZero(0.0)) throw std::invalid_argument("fista: zero matrix");

    const Vec y = view(y_in);
    double L = lipschitz_constant(J);
    // The all-ones start can be orthogonal to the top eigenvector; fall back
    // to the Frobenius bound, which is always an upper bound on L.
    if (!(L > 0.0)) L = J.squaredNorm();
    const double step = 1.0 / L;

    const Eigen::Index n = J.cols();
    Vec x = Vec::Zero(n), z = x, x_prev = x;
    double t = 1.0;
    double f = objective(J, y, x, lambda);

    FistaResult out{{}, f, 0, false, {}};
    for (std::size_t it = 0; it < opts.max_iterations; ++it) {
        const Vec grad = J.transpose() * (J * z - y);
        Vec cand = z - step * grad;
        for (Eigen::Index i = 0; i < n; ++i) cand(i) = soft_threshold(cand(i), step * lambda);
        const double fc = objective(J, y, cand, lambda);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        out.iterations = it + 1;
        if (fc <= f) {
            x_prev = x;
            x = cand;
            const double change = (f - fc) / std::max(std::abs(fc), 1e-300);
            f = fc;
            z = x + ((t - 1.0) / t_next) * (x - x_prev);
            t = t_next;
            out.objective_trace.push_back(f);
            if (change < opts.tolerance) {
                out.converged = true;
                break;
            }
        } else {
            // Reject and restart momentum from x.
            z = x;
            t = 1.0;
            out.objective_trace.push_back(f);
        }
    }
    out.x.assign(x.data(), x.data() + n);
    out.objective = f;
    return out;
}

RDPoint ecsq_rd_point(std::span<const double> x, double step) {
    if (!(step > 0.0) || !std::isfinite(step)) throw std::invalid_argument("ecsq: step must be positive");
    if (x.empty()) throw std::invalid_argument("ecsq: empty input");
    std::map<long long, std::size_t> hist;
    double sq = 0.0;
    for (double v : x) {
        const auto k = std::llround(v / step);
        const double err = v - static_cast<double>(k) * step;
        sq += err * err;
        ++hist[k];
    }
    const double n = static_cast<double>(x.size());
    double rate = 0.0;
    for (const auto& [k, c] : hist) {
        const double p = static_cast<double>(c) / n;
        rate -= p * std::log2(p);
    }
    return {std::max(0.0, rate), sq / n};
}

std::vector<RDPoint> blahut_arimoto(std::span<const double> pmf, const Eigen::MatrixXd& distortion,
                                    std::span<const double> slopes, const BlahutOptions& opts) {
    const auto rows = static_cast<Eigen::Index>(pmf.size());
    if (rows == 0 || distortion.rows() != rows || distortion.cols() == 0) {
        throw std::invalid_argument("blahut_arimoto: pmf and distortion matrix disagree");
    }
    double mass = 0.0;
    for (double p : pmf) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("blahut_arimoto: pmf has invalid entries");
        mass += p;
    }
    if (std::abs(mass - 1.0) > 1e-9) throw std::invalid_argument("blahut_arimoto: pmf does not sum to 1");
    if (!distortion.allFinite() || distortion.minCoeff() < 0.0) {
        throw std::invalid_argument("blahut_arimoto: distortion must be finite and nonnegative");
    }

    const Vec p = view(pmf);
    const Eigen::Index cols = distortion.cols();
    // Per-row minimum cancels in the normalization, keeping exp() in range.
    const Vec row_min = distortion.rowwise().minCoeff();

    for (double beta : slopes) {
        if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("blahut_arimoto: bad slope");
    }
    // Slopes are visited in decreasing order, each starting from the previous
    // output distribution.
    std::vector<std::size_t> visit(slopes.size());
    std::iota(visit.begin(), visit.end(), std::size_t{0});
    std::stable_sort(visit.begin(), visit.end(), [&](std::size_t a, std::size_t b) { return slopes[a] > slopes[b]; });

    std::vector<RDPoint> out(slopes.size());
    Vec q = Vec::Constant(cols, 1.0 / static_cast<double>(cols));
    for (const std::size_t idx : visit) {
        const double beta = slopes[idx];
        Eigen::MatrixXd K(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j) {
            for (Eigen::Index i = 0; i < rows; ++i) K(i, j) = std::exp(-beta * (distortion(i, j) - row_min(i)));
        }
        const Eigen::MatrixXd KD = K.cwiseProduct(distortion);

        double rate = std::numeric_limits<double>::infinity();
        double dist = 0.0;
        for (std::size_t it = 0; it < opts.max_iterations; ++it) {
            const Vec Z = K * q;                           // Z(x) = sum_j q_j K(x, j)
            const Vec w = p.cwiseQuotient(Z);              // p(x) / Z(x)
            const Vec c = K.transpose() * w;               // q update factor
            dist = w.dot(KD * q);
            // At the current q: R = -beta D - sum p log Z', with Z' undoing the
            // row shift.
            double log_term = 0.0;
            for (Eigen::Index i = 0; i < rows; ++i) {
                if (p(i) > 0.0) log_term += p(i) * (std::log(Z(i)) - beta * row_min(i));
            }
            const double next_rate = std::max(0.0, (-beta * dist - log_term) * std::numbers::log2e);
            q = q.cwiseProduct(c);
            q /= q.sum();
            const bool done = std::abs(next_rate - rate) < opts.tolerance;
            rate = next_rate;
            if (done) break;
        }
        out[idx] = {rate, dist};
    }
    return out;
}

DiscreteSource discretize_laplace(double scale, double half_width, std::size_t bins) {
    if (!(scale > 0.0) || !(half_width > 0.0) || bins < 2) throw std::invalid_argument("discretize_laplace: bad arguments");
    DiscreteSource src;
    src.points.resize(bins);
    src.pmf.resize(bins);
    const double step = 2.0 * half_width / static_cast<double>(bins - 1);
    auto cdf = [scale](double v) { return v < 0 ? 0.5 * std::exp(v / scale) : 1.0 - 0.5 * std::exp(-v / scale); };
    double total = 0.0;
    for (std::size_t i = 0; i < bins; ++i) {
        const double c = -half_width + step * static_cast<double>(i);
        src.points[i] = c;
        src.pmf[i] = cdf(c + 0.5 * step) - cdf(c - 0.5 * step);
        total += src.pmf[i];
    }
    for (auto& v : src.pmf) v /= total;
    return src;
}

Eigen::MatrixXd squared_error_matrix(std::span<const double> source, std::span<const double> reproduction) {
    Eigen::MatrixXd d(static_cast<Eigen::Index>(source.size()), static_cast<Eigen::Index>(reproduction.size()));
    for (std::size_t j = 0; j < reproduction.size(); ++j) {
        for (std::size_t i = 0; i < source.size(); ++i) {
            const double e = source[i] - reproduction[j];
            d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = e * e;
        }
    }
    return d;
}

double laplace_entropy_bits(double scale) { return std::log2(2.0 * std::numbers::e * scale); }

double shannon_lower_bound(double entropy_bits, double distortion) {
    return std::max(0.0, entropy_bits - 0.5 * std::log2(2.0 * std::numbers::pi * std::numbers::e * distortion));
}

} // namespace uniest
