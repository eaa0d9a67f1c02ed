#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace audit::source {

struct Query {
    std::string text;    // normalized: trimmed, single-spaced, case-folded
    std::string locale;  // e.g. "de"

    static Query make(const std::string& raw, const std::string& locale);
};

struct SuggestionList {
    Query query;
    std::vector<std::string> suggestions;  // <= 10, pairwise distinct, source order
    int64_t fetched_at_ms = 0;
};

struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FixtureMissError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class SuggestionSource {
public:
    virtual ~SuggestionSource() = default;
    virtual SuggestionList fetch(const Query& query) = 0;
};

struct SourceConfig {
    std::string endpoint_template;  // must contain {q}; {hl} optional
    std::string locale = "de";
    int min_interval_ms = 1000;
    int max_retries = 3;
    int backoff_base_ms = 500;
    int timeout_ms = 10000;
    // Slash-separated path into the JSON response selecting the
    // suggestions array; numeric segments index arrays. Default matches
    // the common [query, [suggestions...]] payload.
    std::string response_path = "1";

    void validate() const;
};

class LiveSource : public SuggestionSource {
public:
    explicit LiveSource(SourceConfig config);
    SuggestionList fetch(const Query& query) override;

    // Dispatch timestamps (ms since epoch) of every issued request,
    // including retries; exposed for rate-limit assertions.
    std::vector<int64_t> request_log() const;

private:
    SourceConfig config_;
    mutable std::mutex gate_;  // serializes dispatch times across workers
    int64_t last_dispatch_ms_ = 0;
    std::vector<int64_t> request_log_;
};

enum class MissPolicy { empty_list, hard_error };

class ReplaySource : public SuggestionSource {
public:
    ReplaySource(std::map<std::string, std::vector<std::string>> fixture,
                 MissPolicy miss_policy = MissPolicy::empty_list);
    static ReplaySource from_file(const std::string& path,
                                  MissPolicy miss_policy = MissPolicy::empty_list);
    SuggestionList fetch(const Query& query) override;

    size_t size() const { return fixture_.size(); }
    size_t fetch_count() const { return fetch_count_; }

private:
    std::map<std::string, std::vector<std::string>> fixture_;
    MissPolicy miss_policy_;
    size_t fetch_count_ = 0;
};

struct SyntheticBiasSpec {
    // group label -> topic -> probability
    std::map<std::string, std::map<std::string, double>> group_mixtures;
    // topic -> term lexicon
    std::map<std::string, std::vector<std::string>> vocabulary;
    int branching = 3;        // suggestions per non-leaf query, 1..10
    double depth_decay = 1.0; // probability a node has children
    uint64_t rng_seed = 0;
    // root canonical (normalized) -> group label; queries inherit the
    // group of the root they extend
    std::map<std::string, std::string> root_groups;

    void validate() const;
    static SyntheticBiasSpec from_file(const std::string& path);
};

// Deterministic generator: suggestions for a query extend the query
// with lexicon terms drawn per the group's topic mixture. Per-query
// randomness is derived from (rng_seed, query text) so results are
// independent of fetch order.
class SyntheticSource : public SuggestionSource {
public:
    explicit SyntheticSource(SyntheticBiasSpec spec);
    SuggestionList fetch(const Query& query) override;

    // Draws a single lexicon term for a group; exposed for mixture tests.
    std::string draw_term(const std::string& group, uint64_t draw_seed) const;
    std::string topic_of(const std::string& term) const;

private:
    SyntheticBiasSpec spec_;
    std::map<std::string, std::string> term_topic_;
};

std::unique_ptr<SuggestionSource> synthesize_source(SyntheticBiasSpec spec);

// Fetches each query against the source and writes a replayable JSON
// fixture (query -> suggestions). Replaying reproduces responses exactly.
void record_fixture(SuggestionSource& source, const std::vector<Query>& queries,
                    const std::string& path);

int64_t now_ms();

}  // namespace audit::source
