#include "audit/preprocess.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <unordered_map>

#include "audit/text.hpp"
#include "json.hpp"

namespace audit::preprocess {

using nlohmann::json;
using nlohmann::ordered_json;

size_t AuditCorpus::global_unique_count() const {
    std::set<std::string> seen;
    for (const auto& [root, suggestions] : per_root)
        for (const auto& s : suggestions) seen.insert(s.stripped);
    return seen.size();
}

size_t AuditCorpus::unique_count(const std::string& root) const {
    auto it = per_root.find(root);
    return it == per_root.end() ? 0 : it->second.size();
}

std::string strip_root(const std::string& query, const tree::RootTerm& root_term) {
    std::set<std::string> root_tokens;
    for (const auto& v : root_term.variants)
        for (const auto& t : text::tokenize(v)) root_tokens.insert(t);

    std::vector<std::string> kept;
    for (const auto& t : text::tokenize(text::normalize(query)))
        if (!root_tokens.count(t)) kept.push_back(t);
    return text::join_tokens(kept);
}

std::vector<std::string> remove_stopwords(const std::string& stripped,
                                          const std::set<std::string>& stopwords) {
    std::vector<std::string> tokens;
    for (const auto& t : text::tokenize(text::casefold(stripped)))
        if (!stopwords.count(t)) tokens.push_back(t);
    return tokens;
}

std::set<std::string> load_stopwords(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_stopwords: cannot open " + path);
    std::set<std::string> stopwords;
    std::string line;
    while (std::getline(in, line)) {
        std::string norm = text::normalize(line);
        if (!norm.empty()) stopwords.insert(norm);
    }
    return stopwords;
}

AuditCorpus build_corpus(const std::vector<tree::SuggestionTree>& trees,
                         const std::set<std::string>& stopwords) {
    AuditCorpus corpus;
    std::set<std::string> pre_prune_unique;
    std::set<std::string> post_prune_unique;

    for (const auto& tree : trees) {
        std::unordered_map<std::string, ProcessedSuggestion> by_stripped;
        tree.visit([&](const tree::TreeNode& node) {
            if (node.origin != tree::Origin::suggestion) return;
            ++corpus.raw_suggestion_count;
            const std::string stripped = strip_root(node.query, tree.root_term);
            if (stripped.empty()) return;  // reduced to root terms only
            pre_prune_unique.insert(stripped);
            if (node.pruned) return;
            post_prune_unique.insert(stripped);
            auto it = by_stripped.find(stripped);
            if (it == by_stripped.end()) {
                ProcessedSuggestion ps;
                ps.original = node.query;
                ps.stripped = stripped;
                ps.tokens = remove_stopwords(stripped, stopwords);
                ps.source_root = tree.root_term.metadata_key;
                ps.min_depth = node.depth;
                by_stripped.emplace(stripped, std::move(ps));
            } else {
                it->second.min_depth = std::min(it->second.min_depth, node.depth);
            }
        });
        auto& list = corpus.per_root[tree.root_term.metadata_key];
        for (auto& [_, ps] : by_stripped) list.push_back(std::move(ps));
        std::sort(list.begin(), list.end(),
                  [](const auto& a, const auto& b) { return a.stripped < b.stripped; });
    }

    corpus.stage_counts.emplace_back("rai-crawl", pre_prune_unique.size());
    corpus.stage_counts.emplace_back("pruning", post_prune_unique.size());
    return corpus;
}

void drop_ambiguous_roots(AuditCorpus& corpus, const std::vector<std::string>& drop_list) {
    for (const auto& key : drop_list) {
        auto it = corpus.per_root.find(key);
        if (it == corpus.per_root.end()) {
            std::cerr << "drop_ambiguous_roots: unknown root '" << key << "', skipping\n";
            continue;
        }
        corpus.per_root.erase(it);
        corpus.dropped_roots.push_back(key);
    }
    corpus.stage_counts.emplace_back("ambiguous-root-removal", corpus.global_unique_count());
}

std::vector<std::pair<std::string, size_t>> stage_report(const AuditCorpus& corpus) {
    return corpus.stage_counts;
}

void save_corpus(const AuditCorpus& corpus, const std::string& jsonl_path,
                 const std::string& stages_path, const std::string& config_hash) {
    std::ofstream out(jsonl_path, std::ios::binary);
    if (!out) throw std::runtime_error("save_corpus: cannot write " + jsonl_path);
    for (const auto& [root, suggestions] : corpus.per_root) {
        for (const auto& s : suggestions) {
            ordered_json j;
            j["root"] = s.source_root;
            j["original"] = s.original;
            j["stripped"] = s.stripped;
            j["tokens"] = s.tokens;
            j["min_depth"] = s.min_depth;
            out << j.dump() << '\n';
        }
    }
    ordered_json stages;
    stages["config_hash"] = config_hash;
    stages["raw_suggestion_count"] = corpus.raw_suggestion_count;
    stages["dropped_roots"] = corpus.dropped_roots;
    stages["stages"] = ordered_json::array();
    for (const auto& [name, count] : corpus.stage_counts)
        stages["stages"].push_back({{"stage", name}, {"unique_suggestions", count}});
    std::ofstream sout(stages_path, std::ios::binary);
    if (!sout) throw std::runtime_error("save_corpus: cannot write " + stages_path);
    sout << stages.dump(2) << '\n';
}

AuditCorpus load_corpus(const std::string& jsonl_path, const std::string& stages_path) {
    AuditCorpus corpus;
    std::ifstream in(jsonl_path, std::ios::binary);
    if (!in) throw std::runtime_error("load_corpus: cannot open " + jsonl_path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        ProcessedSuggestion ps;
        ps.source_root = j.at("root").get<std::string>();
        ps.original = j.at("original").get<std::string>();
        ps.stripped = j.at("stripped").get<std::string>();
        ps.tokens = j.at("tokens").get<std::vector<std::string>>();
        ps.min_depth = j.at("min_depth").get<int>();
        corpus.per_root[ps.source_root].push_back(std::move(ps));
    }
    std::ifstream sin(stages_path, std::ios::binary);
    if (!sin) throw std::runtime_error("load_corpus: cannot open " + stages_path);
    json stages = json::parse(sin);
    corpus.raw_suggestion_count = stages.value("raw_suggestion_count", 0LL);
    if (stages.contains("dropped_roots"))
        corpus.dropped_roots = stages.at("dropped_roots").get<std::vector<std::string>>();
    for (const auto& row : stages.at("stages"))
        corpus.stage_counts.emplace_back(row.at("stage").get<std::string>(),
                                         row.at("unique_suggestions").get<size_t>());
    return corpus;
}

}  // namespace audit::preprocess
