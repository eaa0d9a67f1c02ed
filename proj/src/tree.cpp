#include "audit/tree.hpp"

#include <deque>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "audit/text.hpp"
#include "json.hpp"

namespace audit::tree {

using nlohmann::ordered_json;

RootTerm RootTerm::make(const std::string& canonical, std::vector<std::string> variants,
                        const std::string& metadata_key) {
    RootTerm rt;
    rt.canonical = text::normalize(canonical);
    if (rt.canonical.empty()) throw std::invalid_argument("RootTerm: empty canonical");
    rt.metadata_key = metadata_key.empty() ? rt.canonical : metadata_key;
    std::set<std::string> seen;
    for (auto& v : variants) {
        std::string norm = text::normalize(v);
        if (!norm.empty() && seen.insert(norm).second) rt.variants.push_back(norm);
    }
    if (!seen.count(rt.canonical)) rt.variants.insert(rt.variants.begin(), rt.canonical);
    return rt;
}

RootTerm RootTerm::from_variant_file(const std::string& canonical, const std::string& path,
                                     const std::string& metadata_key) {
    std::vector<std::string> variants;
    std::ifstream in(path);
    if (in) {
        std::string line;
        while (std::getline(in, line)) {
            std::string norm = text::normalize(line);
            if (!norm.empty()) variants.push_back(norm);
        }
    }
    return make(canonical, std::move(variants), metadata_key);
}

size_t SuggestionTree::node_count() const {
    size_t n = 0;
    visit([&](const TreeNode&) { ++n; });
    return n;
}

void SuggestionTree::visit(const std::function<void(const TreeNode&)>& fn) const {
    std::deque<const TreeNode*> queue{&root};
    while (!queue.empty()) {
        const TreeNode* node = queue.front();
        queue.pop_front();
        fn(*node);
        for (const auto& c : node->children) queue.push_back(&c);
    }
}

std::vector<source::Query> expand_root(const RootTerm& root_term,
                                       const std::vector<std::string>& alphabet,
                                       const std::string& locale) {
    std::set<std::string> distinct(alphabet.begin(), alphabet.end());
    if (distinct.size() != alphabet.size())
        throw std::invalid_argument("expand_root: alphabet characters must be distinct");
    std::vector<source::Query> seeds;
    seeds.push_back(source::Query::make(root_term.canonical, locale));
    for (const auto& ch : alphabet)
        seeds.push_back(source::Query::make(root_term.canonical + " " + ch, locale));
    return seeds;
}

std::vector<std::string> default_alphabet(const std::string& locale) {
    std::vector<std::string> alphabet;
    for (char c = 'a'; c <= 'z'; ++c) alphabet.emplace_back(1, c);
    if (locale == "de") {
        alphabet.push_back("ä");  // ä
        alphabet.push_back("ö");  // ö
        alphabet.push_back("ü");  // ü
        alphabet.push_back("ß");  // ß
    }
    return alphabet;
}

namespace {

const char* origin_name(Origin o) {
    switch (o) {
        case Origin::root: return "root";
        case Origin::letter_seed: return "letter_seed";
        default: return "suggestion";
    }
}

Origin origin_from(const std::string& s) {
    if (s == "root") return Origin::root;
    if (s == "letter_seed") return Origin::letter_seed;
    if (s == "suggestion") return Origin::suggestion;
    throw std::runtime_error("deserialize_tree: unknown origin '" + s + "'");
}

ordered_json node_to_json(const TreeNode& n) {
    ordered_json j;
    j["query"] = n.query;
    j["added_term"] = n.added_term;
    j["depth"] = n.depth;
    j["origin"] = origin_name(n.origin);
    j["pruned"] = n.pruned;
    j["children"] = ordered_json::array();
    for (const auto& c : n.children) j["children"].push_back(node_to_json(c));
    return j;
}

TreeNode node_from_json(const ordered_json& j, int expected_depth) {
    TreeNode n;
    n.query = j.at("query").get<std::string>();
    n.added_term = j.at("added_term").get<std::string>();
    n.depth = j.at("depth").get<int>();
    if (n.depth != expected_depth)
        throw std::runtime_error("deserialize_tree: depth mismatch at '" + n.query + "'");
    n.origin = origin_from(j.at("origin").get<std::string>());
    n.pruned = j.at("pruned").get<bool>();
    for (const auto& c : j.at("children")) n.children.push_back(node_from_json(c, expected_depth + 1));
    return n;
}

ordered_json tree_to_json(const SuggestionTree& tree) {
    ordered_json j;
    j["root_term"] = tree.root_term.canonical;
    j["metadata_key"] = tree.root_term.metadata_key;
    j["variants"] = tree.root_term.variants;
    j["max_depth"] = tree.max_depth;
    j["alphabet"] = tree.alphabet;
    j["crawl_stats"] = {{"requests_made", tree.crawl_stats.requests_made},
                        {"suggestions_returned", tree.crawl_stats.suggestions_returned},
                        {"duplicates_skipped", tree.crawl_stats.duplicates_skipped}};
    if (!tree.config_hash.empty()) j["config_hash"] = tree.config_hash;
    j["root"] = node_to_json(tree.root);
    return j;
}

SuggestionTree tree_from_json(const ordered_json& j) {
    SuggestionTree tree;
    tree.root_term.canonical = j.at("root_term").get<std::string>();
    tree.root_term.metadata_key = j.value("metadata_key", tree.root_term.canonical);
    tree.root_term.variants = j.at("variants").get<std::vector<std::string>>();
    tree.max_depth = j.at("max_depth").get<int>();
    tree.alphabet = j.at("alphabet").get<std::vector<std::string>>();
    const auto& cs = j.at("crawl_stats");
    tree.crawl_stats.requests_made = cs.at("requests_made").get<int64_t>();
    tree.crawl_stats.suggestions_returned = cs.at("suggestions_returned").get<int64_t>();
    tree.crawl_stats.duplicates_skipped = cs.at("duplicates_skipped").get<int64_t>();
    tree.config_hash = j.value("config_hash", "");
    tree.root = node_from_json(j.at("root"), 0);
    return tree;
}

struct ResumeState {
    SuggestionTree tree;
    int pending_depth = 0;
    bool complete = false;
};

void write_checkpoint(const SuggestionTree& tree, int pending_depth, bool complete,
                      const std::string& path) {
    ordered_json j = tree_to_json(tree);
    j["pending_depth"] = pending_depth;
    j["complete"] = complete;
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("checkpoint: cannot write " + tmp);
        out << j.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
}

std::optional<ResumeState> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    ordered_json j = ordered_json::parse(in);
    ResumeState state;
    state.tree = tree_from_json(j);
    state.pending_depth = j.value("pending_depth", 0);
    state.complete = j.value("complete", false);
    return state;
}

}  // namespace

SuggestionTree build_tree(const RootTerm& root_term, source::SuggestionSource& src,
                          int max_depth, const std::vector<std::string>& alphabet,
                          const BuildOptions& options) {
    if (max_depth < 1) throw std::invalid_argument("build_tree: max_depth must be >= 1");

    SuggestionTree tree;
    int pending_depth = 0;
    bool resumed = false;
    if (!options.checkpoint_path.empty()) {
        if (auto state = load_checkpoint(options.checkpoint_path)) {
            if (state->complete) return std::move(state->tree);
            tree = std::move(state->tree);
            pending_depth = state->pending_depth;
            resumed = true;
        }
    }
    if (!resumed) {
        tree.root_term = root_term;
        tree.max_depth = max_depth;
        tree.alphabet = alphabet;
        tree.root = TreeNode{root_term.canonical, "", 0, Origin::root, false, {}};
        for (const auto& ch : alphabet) {
            tree.root.children.push_back(
                TreeNode{root_term.canonical + " " + ch, ch, 1, Origin::letter_seed, false, {}});
        }
    }

    for (int d = pending_depth; d < max_depth; ++d) {
        // First-occurrence nodes in BFS order with depth < max_depth are
        // the ones scheduled for expansion; recomputing the frontier per
        // level avoids holding pointers across child appends and lets a
        // checkpoint omit the visited set. Expansion only appends to a
        // frontier node's own children, so frontier pointers stay valid.
        std::set<std::string> visited;
        std::vector<TreeNode*> frontier;
        {
            std::deque<TreeNode*> queue{&tree.root};
            while (!queue.empty()) {
                TreeNode* node = queue.front();
                queue.pop_front();
                if (node->depth < max_depth && visited.insert(node->query).second &&
                    node->depth == d)
                    frontier.push_back(node);
                for (auto& c : node->children) queue.push_back(&c);
            }
        }
        if (frontier.empty()) break;

        for (TreeNode* node : frontier) {
            source::SuggestionList list =
                src.fetch(source::Query::make(node->query, options.locale));
            ++tree.crawl_stats.requests_made;
            std::set<std::string> sibling_queries;
            for (const auto& c : node->children) sibling_queries.insert(c.query);
            for (const auto& s : list.suggestions) {
                if (!sibling_queries.insert(s).second) continue;  // children pairwise distinct
                ++tree.crawl_stats.suggestions_returned;
                std::string added;
                if (s.size() > node->query.size() && s.compare(0, node->query.size(), node->query) == 0)
                    added = text::normalize_whitespace(s.substr(node->query.size()));
                node->children.push_back(TreeNode{s, added, d + 1, Origin::suggestion, false, {}});
                if (!(d + 1 < max_depth && visited.insert(s).second))
                    ++tree.crawl_stats.duplicates_skipped;
            }
        }
        if (!options.checkpoint_path.empty())
            write_checkpoint(tree, d + 1, false, options.checkpoint_path);
    }

    if (!options.checkpoint_path.empty())
        write_checkpoint(tree, max_depth, true, options.checkpoint_path);
    return tree;
}

namespace {

bool contains_variant(const std::string& query, const std::vector<std::string>& variants) {
    const std::string folded = text::normalize(query);
    for (const auto& v : variants)
        if (text::contains_substring(folded, v)) return true;
    return false;
}

size_t mark_pruned(TreeNode& node, const std::vector<std::string>& variants, bool ancestor_pruned) {
    bool prune_here = ancestor_pruned;
    if (!prune_here && node.origin == Origin::suggestion &&
        !contains_variant(node.query, variants)) {
        prune_here = true;
    }
    size_t count = 0;
    if (prune_here && !node.pruned) {
        node.pruned = true;
        ++count;
    }
    for (auto& c : node.children) count += mark_pruned(c, variants, prune_here);
    return count;
}

}  // namespace

size_t prune(SuggestionTree& tree) {
    return mark_pruned(tree.root, tree.root_term.variants, false);
}

std::string serialize_tree_string(const SuggestionTree& tree) {
    return tree_to_json(tree).dump(2) + "\n";
}

void serialize_tree(const SuggestionTree& tree, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("serialize_tree: cannot write " + path);
    out << serialize_tree_string(tree);
}

SuggestionTree deserialize_tree_string(const std::string& data) {
    return tree_from_json(ordered_json::parse(data));
}

SuggestionTree deserialize_tree(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("deserialize_tree: cannot open " + path);
    ordered_json j = ordered_json::parse(in);
    return tree_from_json(j);
}

}  // namespace audit::tree
