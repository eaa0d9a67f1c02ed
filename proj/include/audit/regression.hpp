#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace audit::regression {

// Regularized incomplete beta I_x(a,b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

// Student-t CDF. dof >= 1 required.
double t_cdf(double t, double dof);

// 2 * (1 - t_cdf(|t|, dof))
double two_sided_p(double t, double dof);

struct CoefficientResult {
    std::string name;
    double beta = 0.0;
    double stderr_ = 0.0;
    double t_stat = 0.0;
    double p_value = 1.0;
};

struct OlsFit {
    std::vector<CoefficientResult> coefficients;  // [0] is the intercept
    double r_squared = 0.0;
    double residual_variance = 0.0;  // sigma-hat squared
    int n = 0;
    int dof = 0;  // n - #parameters
};

// OLS of y on [1 | X] via Householder QR. column_names label the X
// columns (intercept is implicit). Throws std::invalid_argument on
// rank deficiency or n <= #parameters.
OlsFit ols(const std::vector<std::vector<double>>& x_columns,
           const std::vector<double>& y,
           const std::vector<std::string>& column_names);

struct PoliticianMeta {
    std::string name;  // normalized, doubles as metadata_key
    std::string gender;
    std::string party;
    int year_of_birth = 0;
    std::string pol_role;
};

struct DesignMatrix {
    std::vector<std::string> column_names;
    std::vector<std::vector<double>> columns;  // column-major, no intercept
    std::vector<std::string> row_keys;         // metadata_key per row
};

struct DummyScheme {
    std::string gender_base = "male";
    std::string party_base = "SPD";
    std::string role_base = "party-leader";
};

// One 0/1 column per non-base level of gender/party/pol_role, plus
// year-of-birth as a numeric column. Throws on unseen categories.
DesignMatrix dummy_encode(const std::vector<PoliticianMeta>& metas, const DummyScheme& scheme);

struct ShareVector {
    std::string metadata_key;
    std::vector<double> shares;  // per-cluster fractions
    int n_suggestions = 0;
};

struct ReportRow {
    std::string attribute;  // dummy column name
    std::string dependent;  // "cluster-0".."cluster-k-1" or "n-suggestions"
    double effect = 0.0;    // signed beta of the attribute
    double r_squared = 0.0;
    double p_value = 1.0;
    bool significant = false;
};

struct BiasReport {
    std::vector<ReportRow> rows;
    double alpha = 0.05;
    std::string mode;  // "univariate" or "multivariate"
    int n = 0;
};

enum class AuditMode { univariate, multivariate };

// Runs the dummy-variable regressions over cluster shares and the
// suggestion count. univariate: one simple regression per
// (attribute, dependent) pair; multivariate: full dummy block per
// dependent, one report row per attribute coefficient.
BiasReport audit_bias(const std::vector<ShareVector>& shares,
                      const std::vector<PoliticianMeta>& metas,
                      double alpha = 0.05,
                      AuditMode mode = AuditMode::univariate,
                      const DummyScheme& scheme = {});

}  // namespace audit::regression
