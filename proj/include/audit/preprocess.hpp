#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "audit/tree.hpp"

namespace audit::preprocess {

struct ProcessedSuggestion {
    std::string original;
    std::string stripped;  // root-term tokens removed
    std::vector<std::string> tokens;  // stopwords removed, lowercased
    std::string source_root;  // metadata_key
    int min_depth = 0;
};

struct AuditCorpus {
    // metadata_key -> suggestions, unique by stripped text
    std::map<std::string, std::vector<ProcessedSuggestion>> per_root;
    std::vector<std::pair<std::string, size_t>> stage_counts;
    std::vector<std::string> dropped_roots;
    int64_t raw_suggestion_count = 0;  // total crawled, pre-dedup

    // Count of distinct stripped texts across all roots.
    size_t global_unique_count() const;
    size_t unique_count(const std::string& root) const;
};

// Removes whole-word occurrences of any root-variant token; other
// tokens keep their order. Idempotent.
std::string strip_root(const std::string& query, const tree::RootTerm& root_term);

std::vector<std::string> remove_stopwords(const std::string& stripped,
                                          const std::set<std::string>& stopwords);

std::set<std::string> load_stopwords(const std::string& path);

// Ingests pruned trees into the corpus: suggestion-origin nodes that
// survived pruning, deduplicated per root by stripped text, with
// min_depth kept. Records the "rai-crawl" (pre-prune) and "pruning"
// stage counts.
AuditCorpus build_corpus(const std::vector<tree::SuggestionTree>& trees,
                         const std::set<std::string>& stopwords);

// Drops whole root-term trees (ambiguous names); unknown keys warn.
// Appends the "ambiguous-root-removal" stage count.
void drop_ambiguous_roots(AuditCorpus& corpus, const std::vector<std::string>& drop_list);

// Stage/count rows in recorded order.
std::vector<std::pair<std::string, size_t>> stage_report(const AuditCorpus& corpus);

void save_corpus(const AuditCorpus& corpus, const std::string& jsonl_path,
                 const std::string& stages_path, const std::string& config_hash);
AuditCorpus load_corpus(const std::string& jsonl_path, const std::string& stages_path);

}  // namespace audit::preprocess
