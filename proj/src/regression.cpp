#include "audit/regression.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace audit::regression {

namespace {

// Lentz's method for the continued fraction of the incomplete beta.
double beta_cont_frac(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_cont_frac(a, b, x) / a;
    }
    return 1.0 - front * beta_cont_frac(b, a, 1.0 - x) / b;
}

double t_cdf(double t, double dof) {
    if (dof < 1.0) throw std::invalid_argument("t_cdf: dof must be >= 1");
    const double x = dof / (dof + t * t);
    const double tail = 0.5 * incomplete_beta(dof / 2.0, 0.5, x);
    return t >= 0.0 ? 1.0 - tail : tail;
}

double two_sided_p(double t, double dof) {
    double p = 2.0 * (1.0 - t_cdf(std::fabs(t), dof));
    return std::clamp(p, 0.0, 1.0);
}

OlsFit ols(const std::vector<std::vector<double>>& x_columns,
           const std::vector<double>& y,
           const std::vector<std::string>& column_names) {
    const int n = static_cast<int>(y.size());
    const int p = static_cast<int>(x_columns.size()) + 1;  // + intercept
    if (static_cast<int>(column_names.size()) != p - 1)
        throw std::invalid_argument("ols: column_names size mismatch");
    if (n <= p) throw std::invalid_argument("ols: need n > #parameters");
    for (const auto& col : x_columns)
        if (static_cast<int>(col.size()) != n)
            throw std::invalid_argument("ols: column length mismatch");

    // Row-major design matrix with leading intercept column.
    std::vector<double> A(static_cast<size_t>(n) * p);
    for (int i = 0; i < n; ++i) {
        A[static_cast<size_t>(i) * p] = 1.0;
        for (int j = 1; j < p; ++j) A[static_cast<size_t>(i) * p + j] = x_columns[j - 1][i];
    }
    std::vector<double> rhs = y;

    // Householder QR, in place: A becomes R in its upper triangle.
    for (int k = 0; k < p; ++k) {
        double norm = 0.0;
        for (int i = k; i < n; ++i) {
            const double v = A[static_cast<size_t>(i) * p + k];
            norm += v * v;
        }
        norm = std::sqrt(norm);
        if (norm < 1e-12) {
            throw std::invalid_argument("ols: rank-deficient design matrix at column " +
                                        (k == 0 ? std::string("intercept") : column_names[k - 1]));
        }
        double akk = A[static_cast<size_t>(k) * p + k];
        const double alpha = akk > 0 ? -norm : norm;
        std::vector<double> v(n - k);
        v[0] = akk - alpha;
        for (int i = k + 1; i < n; ++i) v[i - k] = A[static_cast<size_t>(i) * p + k];
        double vnorm2 = 0.0;
        for (double w : v) vnorm2 += w * w;
        if (vnorm2 < 1e-300) continue;
        for (int j = k; j < p; ++j) {
            double dot = 0.0;
            for (int i = k; i < n; ++i) dot += v[i - k] * A[static_cast<size_t>(i) * p + j];
            const double s = 2.0 * dot / vnorm2;
            for (int i = k; i < n; ++i) A[static_cast<size_t>(i) * p + j] -= s * v[i - k];
        }
        double dot = 0.0;
        for (int i = k; i < n; ++i) dot += v[i - k] * rhs[i];
        const double s = 2.0 * dot / vnorm2;
        for (int i = k; i < n; ++i) rhs[i] -= s * v[i - k];
    }

    // Back-substitution: R beta = Q'y (top p entries of rhs).
    std::vector<double> beta(p);
    for (int j = p - 1; j >= 0; --j) {
        double s = rhs[j];
        for (int k = j + 1; k < p; ++k) s -= A[static_cast<size_t>(j) * p + k] * beta[k];
        const double rjj = A[static_cast<size_t>(j) * p + j];
        if (std::fabs(rjj) < 1e-12)
            throw std::invalid_argument("ols: rank-deficient design matrix");
        beta[j] = s / rjj;
    }

    // SSR from the untouched bottom of Q'y.
    double ssr = 0.0;
    for (int i = p; i < n; ++i) ssr += rhs[i] * rhs[i];

    double mean_y = 0.0;
    for (double v : y) mean_y += v;
    mean_y /= n;
    double sst = 0.0;
    for (double v : y) sst += (v - mean_y) * (v - mean_y);

    const int dof = n - p;
    // An SSR at rounding-error level means an exact fit; using it would
    // turn t into a noise/noise ratio.
    double yscale = 0.0;
    for (double v : y) yscale += v * v;
    const double sigma2 = ssr <= 1e-24 * std::max(1.0, yscale) ? 0.0 : ssr / dof;

    // (X'X)^-1 = R^-1 R^-T; invert R then form row norms.
    std::vector<double> rinv(static_cast<size_t>(p) * p, 0.0);
    for (int j = 0; j < p; ++j) {
        rinv[static_cast<size_t>(j) * p + j] = 1.0 / A[static_cast<size_t>(j) * p + j];
        for (int i = j - 1; i >= 0; --i) {
            double s = 0.0;
            for (int k = i + 1; k <= j; ++k)
                s += A[static_cast<size_t>(i) * p + k] * rinv[static_cast<size_t>(k) * p + j];
            rinv[static_cast<size_t>(i) * p + j] = -s / A[static_cast<size_t>(i) * p + i];
        }
    }

    OlsFit fit;
    fit.n = n;
    fit.dof = dof;
    fit.residual_variance = sigma2;
    fit.r_squared = sst > 0.0 ? 1.0 - ssr / sst : 0.0;
    fit.coefficients.resize(p);
    for (int j = 0; j < p; ++j) {
        double xtx_inv_jj = 0.0;
        for (int k = j; k < p; ++k) {
            const double v = rinv[static_cast<size_t>(j) * p + k];
            xtx_inv_jj += v * v;
        }
        auto& c = fit.coefficients[j];
        c.name = j == 0 ? "intercept" : column_names[j - 1];
        c.beta = beta[j];
        c.stderr_ = std::sqrt(sigma2 * xtx_inv_jj);
        c.t_stat = c.stderr_ > 0.0 ? c.beta / c.stderr_ : 0.0;
        c.p_value = two_sided_p(c.t_stat, dof);
    }
    return fit;
}

DesignMatrix dummy_encode(const std::vector<PoliticianMeta>& metas, const DummyScheme& scheme) {
    static const std::vector<std::string> kGenders = {"female", "male"};
    static const std::vector<std::string> kParties = {"SPD", "CDU", "CSU", "FDP",
                                                      "AFD", "Left", "Greens"};
    static const std::vector<std::string> kRoles = {"minister-2021", "minister-2017",
                                                    "prime-minister", "party-leader"};

    auto check = [](const std::vector<std::string>& levels, const std::string& value,
                    const std::string& attr, const std::string& who) {
        if (std::find(levels.begin(), levels.end(), value) == levels.end())
            throw std::invalid_argument("dummy_encode: unseen " + attr + " category '" + value +
                                        "' for politician '" + who + "'");
    };

    DesignMatrix dm;
    for (const auto& m : metas) {
        check(kGenders, m.gender, "gender", m.name);
        check(kParties, m.party, "party", m.name);
        check(kRoles, m.pol_role, "pol-role", m.name);
        dm.row_keys.push_back(m.name);
    }

    auto add_dummies = [&](const std::vector<std::string>& levels, const std::string& base,
                           const std::string& prefix, auto getter) {
        for (const auto& level : levels) {
            if (level == base) continue;
            dm.column_names.push_back(prefix + level);
            std::vector<double> col;
            col.reserve(metas.size());
            for (const auto& m : metas) col.push_back(getter(m) == level ? 1.0 : 0.0);
            dm.columns.push_back(std::move(col));
        }
    };

    add_dummies(kGenders, scheme.gender_base, "gender:",
                [](const PoliticianMeta& m) { return m.gender; });
    add_dummies(kParties, scheme.party_base, "party:",
                [](const PoliticianMeta& m) { return m.party; });
    add_dummies(kRoles, scheme.role_base, "role:",
                [](const PoliticianMeta& m) { return m.pol_role; });

    dm.column_names.push_back("year-of-birth");
    std::vector<double> years;
    years.reserve(metas.size());
    for (const auto& m : metas) years.push_back(static_cast<double>(m.year_of_birth));
    dm.columns.push_back(std::move(years));

    return dm;
}

BiasReport audit_bias(const std::vector<ShareVector>& shares,
                      const std::vector<PoliticianMeta>& metas,
                      double alpha,
                      AuditMode mode,
                      const DummyScheme& scheme) {
    std::unordered_map<std::string, const ShareVector*> by_key;
    for (const auto& s : shares) by_key[s.metadata_key] = &s;

    // Keep only politicians that have shares; preserve metas order.
    std::vector<PoliticianMeta> joined;
    std::vector<const ShareVector*> rows;
    for (const auto& m : metas) {
        auto it = by_key.find(m.name);
        if (it != by_key.end() && it->second->n_suggestions > 0) {
            joined.push_back(m);
            rows.push_back(it->second);
        }
    }
    if (joined.empty()) throw std::invalid_argument("audit_bias: no joinable observations");

    const size_t k = rows.front()->shares.size();
    DesignMatrix dm = dummy_encode(joined, scheme);

    std::vector<std::string> dep_names;
    std::vector<std::vector<double>> dep_values;
    for (size_t c = 0; c < k; ++c) {
        dep_names.push_back("cluster-" + std::to_string(c));
        std::vector<double> y;
        for (const auto* r : rows) y.push_back(r->shares[c]);
        dep_values.push_back(std::move(y));
    }
    dep_names.push_back("n-suggestions");
    {
        std::vector<double> y;
        for (const auto* r : rows) y.push_back(static_cast<double>(r->n_suggestions));
        dep_values.push_back(std::move(y));
    }

    BiasReport report;
    report.alpha = alpha;
    report.mode = mode == AuditMode::univariate ? "univariate" : "multivariate";
    report.n = static_cast<int>(joined.size());

    for (size_t j = 0; j < dm.columns.size(); ++j) {
        for (size_t d = 0; d < dep_names.size(); ++d) {
            ReportRow row;
            row.attribute = dm.column_names[j];
            row.dependent = dep_names[d];
            if (mode == AuditMode::univariate) {
                OlsFit fit = ols({dm.columns[j]}, dep_values[d], {dm.column_names[j]});
                row.effect = fit.coefficients[1].beta;
                row.r_squared = fit.r_squared;
                row.p_value = fit.coefficients[1].p_value;
            } else {
                OlsFit fit = ols(dm.columns, dep_values[d], dm.column_names);
                row.effect = fit.coefficients[j + 1].beta;
                row.r_squared = fit.r_squared;
                row.p_value = fit.coefficients[j + 1].p_value;
            }
            row.significant = row.p_value <= alpha;
            report.rows.push_back(row);
        }
    }
    return report;
}

}  // namespace audit::regression
