#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "audit/source.hpp"

namespace audit::tree {

struct RootTerm {
    std::string canonical;               // normalized
    std::vector<std::string> variants;   // normalized; always includes canonical
    std::string metadata_key;

    static RootTerm make(const std::string& canonical, std::vector<std::string> variants,
                         const std::string& metadata_key);
    // Reads one variant per line; canonical is added if missing.
    static RootTerm from_variant_file(const std::string& canonical, const std::string& path,
                                      const std::string& metadata_key);
};

enum class Origin { root, letter_seed, suggestion };

struct TreeNode {
    std::string query;       // full normalized query text
    std::string added_term;  // suffix relative to parent; empty for root/letter seeds
    int depth = 0;
    Origin origin = Origin::suggestion;
    bool pruned = false;
    std::vector<TreeNode> children;
};

struct CrawlStats {
    int64_t requests_made = 0;
    int64_t suggestions_returned = 0;
    int64_t duplicates_skipped = 0;
};

struct SuggestionTree {
    RootTerm root_term;
    TreeNode root;
    int max_depth = 8;
    std::vector<std::string> alphabet;
    CrawlStats crawl_stats;
    std::string config_hash;  // embedded in the serialized artifact

    size_t node_count() const;
    void visit(const std::function<void(const TreeNode&)>& fn) const;
};

// Root query followed by "root <ch>" for each alphabet character, in
// alphabet order.
std::vector<source::Query> expand_root(const RootTerm& root_term,
                                       const std::vector<std::string>& alphabet,
                                       const std::string& locale = "de");

// a-z, extended with umlauts and sharp s when locale is "de".
std::vector<std::string> default_alphabet(const std::string& locale);

struct BuildOptions {
    std::string locale = "de";
    // When set, the partial tree is serialized here after each
    // completed level and the final build resumes from it.
    std::string checkpoint_path;
};

// Breadth-first, level-by-level interrogation. Every fetched
// suggestion becomes a child; a query already expanded anywhere in the
// tree is kept as a leaf and never re-expanded, which also guarantees
// termination on cyclic sources. A transport error surfaces with the
// partial tree checkpointed (if a checkpoint path is configured).
SuggestionTree build_tree(const RootTerm& root_term, source::SuggestionSource& src,
                          int max_depth, const std::vector<std::string>& alphabet,
                          const BuildOptions& options = {});

// Marks every node whose query contains no root variant (case-folded
// substring), then propagates the mark to all descendants. Root and
// letter-seed nodes are never pruned. Returns newly pruned count.
size_t prune(SuggestionTree& tree);

void serialize_tree(const SuggestionTree& tree, const std::string& path);
std::string serialize_tree_string(const SuggestionTree& tree);
SuggestionTree deserialize_tree(const std::string& path);
SuggestionTree deserialize_tree_string(const std::string& data);

}  // namespace audit::tree
