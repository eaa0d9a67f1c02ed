#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "audit/preprocess.hpp"
#include "audit/regression.hpp"
#include "audit/source.hpp"
#include "audit/tree.hpp"

namespace audit::pipeline {

struct RunConfig {
    std::string roots_file;    // metadata CSV or plain text, one root per line
    std::string variants_dir;  // optional; <slug>.txt per root

    std::string source_type;  // "live", "fixture", "synthetic"
    source::SourceConfig live;
    std::string fixture_path;
    source::MissPolicy miss_policy = source::MissPolicy::empty_list;
    std::string synthetic_spec_path;

    int max_depth = 8;
    std::vector<std::string> alphabet;  // empty -> default_alphabet(locale)
    std::string locale = "de";
    std::string stopwords_path;
    std::string vectors_path;
    std::vector<std::string> drop_roots;

    int k_min = 1, k_max = 10;
    std::optional<int> fixed_k;  // skip selection when set
    uint64_t seed = 0;
    bool seed_set = false;
    double alpha = 0.05;
    regression::AuditMode mode = regression::AuditMode::univariate;
    std::string output_dir;

    std::string config_hash;  // filled by load_config

    static RunConfig load(const std::string& path);
    void validate() const;
};

// Appendix-format metadata CSV: columns name, google-suggestions,
// cluster-0..2, gender, party, year-of-birth, pol-role. The count
// columns are optional on input.
struct MetadataRow {
    regression::PoliticianMeta meta;
    std::optional<int> google_suggestions;
    std::vector<std::optional<int>> cluster_counts;
};

std::vector<MetadataRow> load_metadata_csv(const std::string& path);
void write_metadata_csv(const std::vector<MetadataRow>& rows, const std::string& path);

// filename-safe slug for a root term
std::string slugify(const std::string& name);

std::unique_ptr<source::SuggestionSource> make_source(const RunConfig& config);

std::vector<tree::RootTerm> load_roots(const RunConfig& config);

// Pipeline stages; each reads the previous stage's artifacts from
// output_dir and writes its own. resume skips work whose outputs exist.
void cmd_crawl(const RunConfig& config, bool resume = false);
void cmd_prune(const RunConfig& config);
void cmd_preprocess(const RunConfig& config);
void cmd_vectorize(const RunConfig& config);
void cmd_cluster(const RunConfig& config);
void cmd_analyze(const RunConfig& config);
void cmd_report(const RunConfig& config);
void cmd_run(const RunConfig& config, bool resume = false);
void cmd_record_fixture(const RunConfig& config, const std::string& out_path);

// Shares from per-root unique suggestions joined with global cluster
// assignments (stripped text -> cluster). Orphans in assignments are
// ignored; a clustered suggestion whose root has no metadata is a
// hard error in cmd_analyze.
std::vector<regression::ShareVector> compute_shares(
    const preprocess::AuditCorpus& corpus,
    const std::map<std::string, int>& assignment_by_stripped, int k);

// Renders the bias report as the paper-style text table: one row per
// attribute, signed-R2/p pairs per dependent, '*' on significant cells.
std::string render_report_text(const regression::BiasReport& report,
                               const std::string& config_hash);
std::string render_report_csv(const regression::BiasReport& report);

// Exclusive per-output-dir lock; throws if already held.
class DirLock {
public:
    explicit DirLock(const std::string& output_dir);
    ~DirLock();
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    std::string path_;
};

}  // namespace audit::pipeline
