#include "audit/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "audit/clustering.hpp"
#include "audit/common.hpp"
#include "audit/embedding.hpp"
#include "audit/text.hpp"
#include "json.hpp"

namespace audit::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------- config

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    json j = json::parse(in);

    RunConfig c;
    c.roots_file = j.value("roots_file", "");
    c.variants_dir = j.value("variants_dir", "");
    if (j.contains("source")) {
        const auto& s = j.at("source");
        c.source_type = s.value("type", "fixture");
        c.fixture_path = s.value("path", "");
        if (s.value("miss_policy", "empty") == "error")
            c.miss_policy = source::MissPolicy::hard_error;
        c.synthetic_spec_path = s.value("spec_path", "");
        c.live.endpoint_template = s.value("endpoint_template", "");
        c.live.locale = s.value("locale", "de");
        c.live.min_interval_ms = s.value("min_interval_ms", 1000);
        c.live.max_retries = s.value("max_retries", 3);
        c.live.backoff_base_ms = s.value("backoff_base_ms", 500);
        c.live.timeout_ms = s.value("timeout_ms", 10000);
        c.live.response_path = s.value("response_path", "1");
    }
    c.max_depth = j.value("max_depth", 8);
    if (j.contains("alphabet")) c.alphabet = j.at("alphabet").get<std::vector<std::string>>();
    c.locale = j.value("locale", "de");
    c.stopwords_path = j.value("stopwords", "");
    c.vectors_path = j.value("vectors", "");
    if (j.contains("drop_roots"))
        c.drop_roots = j.at("drop_roots").get<std::vector<std::string>>();
    if (j.contains("k_range")) {
        auto r = j.at("k_range").get<std::vector<int>>();
        if (r.size() != 2) throw std::runtime_error("config: k_range must be [min, max]");
        c.k_min = r[0];
        c.k_max = r[1];
    }
    if (j.contains("k")) c.fixed_k = j.at("k").get<int>();
    if (j.contains("seed")) {
        c.seed = j.at("seed").get<uint64_t>();
        c.seed_set = true;
    }
    c.alpha = j.value("alpha", 0.05);
    c.mode = j.value("mode", "univariate") == "multivariate" ? regression::AuditMode::multivariate
                                                             : regression::AuditMode::univariate;
    c.output_dir = j.value("output_dir", "");

    // Hash over the canonical (key-sorted) form of the parsed config.
    c.config_hash = hex64(fnv1a(j.dump()));
    return c;
}

void RunConfig::validate() const {
    if (!seed_set) throw std::runtime_error("config: seed must be set explicitly");
    if (max_depth < 1) throw std::runtime_error("config: max_depth must be >= 1");
    if (output_dir.empty()) throw std::runtime_error("config: output_dir required");
    if (roots_file.empty()) throw std::runtime_error("config: roots_file required");
    if (!fs::exists(roots_file)) throw std::runtime_error("config: roots_file missing: " + roots_file);
    if (source_type == "fixture" && !fs::exists(fixture_path))
        throw std::runtime_error("config: fixture missing: " + fixture_path);
    if (source_type == "synthetic" && !fs::exists(synthetic_spec_path))
        throw std::runtime_error("config: synthetic spec missing: " + synthetic_spec_path);
    if (!stopwords_path.empty() && !fs::exists(stopwords_path))
        throw std::runtime_error("config: stopwords missing: " + stopwords_path);
    if (!vectors_path.empty() && !fs::exists(vectors_path))
        throw std::runtime_error("config: vectors missing: " + vectors_path);
}

// ------------------------------------------------------------------- csv

namespace {

std::vector<std::string> parse_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

const std::vector<std::string> kMetaHeader = {"name",   "google-suggestions", "cluster-0",
                                              "cluster-1", "cluster-2",       "gender",
                                              "party",  "year-of-birth",      "pol-role"};

}  // namespace

std::vector<MetadataRow> load_metadata_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("metadata: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("metadata: empty file " + path);
    auto header = parse_csv_line(line);
    std::map<std::string, int> col;
    for (size_t i = 0; i < header.size(); ++i) col[text::normalize(header[i])] = static_cast<int>(i);
    for (const auto& required : {"name", "gender", "party", "year-of-birth", "pol-role"})
        if (!col.count(required))
            throw std::runtime_error(std::string("metadata: missing column ") + required);

    auto opt_int = [&](const std::vector<std::string>& f, const char* name) -> std::optional<int> {
        auto it = col.find(name);
        if (it == col.end() || it->second >= static_cast<int>(f.size())) return std::nullopt;
        const std::string& v = f[it->second];
        if (v.empty()) return std::nullopt;
        return std::stoi(v);
    };

    std::vector<MetadataRow> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto f = parse_csv_line(line);
        MetadataRow row;
        row.meta.name = text::normalize(f.at(col.at("name")));
        row.meta.gender = text::normalize(f.at(col.at("gender")));
        row.meta.party = f.at(col.at("party"));
        row.meta.year_of_birth = std::stoi(f.at(col.at("year-of-birth")));
        row.meta.pol_role = text::normalize(f.at(col.at("pol-role")));
        if (row.meta.year_of_birth < 1900 || row.meta.year_of_birth > 2010)
            throw std::runtime_error("metadata: implausible year-of-birth for " + row.meta.name);
        row.google_suggestions = opt_int(f, "google-suggestions");
        row.cluster_counts = {opt_int(f, "cluster-0"), opt_int(f, "cluster-1"),
                              opt_int(f, "cluster-2")};
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_metadata_csv(const std::vector<MetadataRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("metadata: cannot write " + path);
    for (size_t i = 0; i < kMetaHeader.size(); ++i)
        out << (i ? "," : "") << kMetaHeader[i];
    out << '\n';
    auto cell = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); };
    for (const auto& r : rows) {
        out << csv_escape(r.meta.name) << ',' << cell(r.google_suggestions);
        for (int c = 0; c < 3; ++c)
            out << ',' << cell(c < static_cast<int>(r.cluster_counts.size()) ? r.cluster_counts[c]
                                                                             : std::nullopt);
        out << ',' << r.meta.gender << ',' << r.meta.party << ',' << r.meta.year_of_birth << ','
            << r.meta.pol_role << '\n';
    }
}

// ----------------------------------------------------------------- roots

std::string slugify(const std::string& name) {
    std::string out;
    for (unsigned char c : text::normalize(name)) {
        if (std::isalnum(c)) out.push_back(static_cast<char>(c));
        else if (c == ' ' || c == '-' || c == '_') out.push_back('_');
        // other bytes (umlaut continuation etc.) dropped
    }
    return out;
}

std::vector<tree::RootTerm> load_roots(const RunConfig& config) {
    std::vector<std::string> names;
    if (config.roots_file.size() > 4 &&
        config.roots_file.compare(config.roots_file.size() - 4, 4, ".csv") == 0) {
        for (const auto& row : load_metadata_csv(config.roots_file)) names.push_back(row.meta.name);
    } else {
        std::ifstream in(config.roots_file);
        if (!in) throw std::runtime_error("load_roots: cannot open " + config.roots_file);
        std::string line;
        while (std::getline(in, line)) {
            std::string norm = text::normalize(line);
            if (!norm.empty()) names.push_back(norm);
        }
    }
    if (names.empty()) throw std::runtime_error("load_roots: no root terms in " + config.roots_file);

    std::vector<tree::RootTerm> roots;
    for (const auto& name : names) {
        const std::string slug = slugify(name);
        const std::string vfile =
            config.variants_dir.empty() ? "" : config.variants_dir + "/" + slug + ".txt";
        if (!vfile.empty() && fs::exists(vfile))
            roots.push_back(tree::RootTerm::from_variant_file(name, vfile, name));
        else
            roots.push_back(tree::RootTerm::make(name, {}, name));
    }
    return roots;
}

std::unique_ptr<source::SuggestionSource> make_source(const RunConfig& config) {
    if (config.source_type == "live") {
        return std::make_unique<source::LiveSource>(config.live);
    }
    if (config.source_type == "fixture") {
        return std::make_unique<source::ReplaySource>(
            source::ReplaySource::from_file(config.fixture_path, config.miss_policy));
    }
    if (config.source_type == "synthetic") {
        auto spec = source::SyntheticBiasSpec::from_file(config.synthetic_spec_path);
        if (spec.rng_seed == 0) spec.rng_seed = derive_seed(config.seed, "synthetic-source");
        return source::synthesize_source(std::move(spec));
    }
    throw std::runtime_error("make_source: unknown source type '" + config.source_type + "'");
}

// ---------------------------------------------------------------- stages

namespace {

std::string out_path(const RunConfig& c, const std::string& rel) {
    return c.output_dir + "/" + rel;
}

void require_file(const std::string& path, const std::string& producer) {
    if (!fs::exists(path))
        throw std::runtime_error("missing input " + path + "; run `" + producer + "` first");
}

std::vector<std::string> alphabet_of(const RunConfig& c) {
    return c.alphabet.empty() ? tree::default_alphabet(c.locale) : c.alphabet;
}

struct SuggestionVecFile {
    std::vector<std::string> ids;  // global-unique stripped texts, sorted
    std::vector<clustering::Vec> vectors;
    std::vector<std::vector<std::string>> tokens;
};

SuggestionVecFile load_suggestion_vectors(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    SuggestionVecFile out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        out.ids.push_back(j.at("id").get<std::string>());
        out.vectors.push_back(j.at("vector").get<std::vector<double>>());
        out.tokens.push_back(j.at("tokens").get<std::vector<std::string>>());
    }
    return out;
}

}  // namespace

void cmd_crawl(const RunConfig& config, bool resume) {
    config.validate();
    fs::create_directories(out_path(config, "trees"));
    auto roots = load_roots(config);
    auto src = make_source(config);
    const auto alphabet = alphabet_of(config);

    int64_t raw_total = 0;
    ordered_json summary;
    summary["config_hash"] = config.config_hash;
    summary["trees"] = ordered_json::array();

    for (const auto& root : roots) {
        const std::string slug = slugify(root.canonical);
        const std::string tree_file = out_path(config, "trees/" + slug + ".json");
        const std::string ckpt_file = out_path(config, "trees/" + slug + ".ckpt.json");

        tree::SuggestionTree t;
        if (resume && fs::exists(tree_file)) {
            t = tree::deserialize_tree(tree_file);  // finished earlier: zero fetches
        } else {
            tree::BuildOptions opts;
            opts.locale = config.locale;
            opts.checkpoint_path = ckpt_file;
            t = tree::build_tree(root, *src, config.max_depth, alphabet, opts);
            t.config_hash = config.config_hash;
            tree::serialize_tree(t, tree_file);
            fs::remove(ckpt_file);
        }
        raw_total += t.crawl_stats.suggestions_returned + t.crawl_stats.duplicates_skipped;
        summary["trees"].push_back({{"root", root.canonical},
                                    {"file", "trees/" + slug + ".json"},
                                    {"nodes", t.node_count()},
                                    {"requests", t.crawl_stats.requests_made},
                                    {"suggestions", t.crawl_stats.suggestions_returned}});
    }
    summary["raw_suggestions"] = raw_total;
    std::ofstream out(out_path(config, "crawl_summary.json"), std::ios::binary);
    out << summary.dump(2) << '\n';
}

void cmd_prune(const RunConfig& config) {
    config.validate();
    require_file(out_path(config, "crawl_summary.json"), "crawl");
    fs::create_directories(out_path(config, "pruned"));
    auto roots = load_roots(config);

    ordered_json summary;
    summary["config_hash"] = config.config_hash;
    summary["trees"] = ordered_json::array();
    size_t total_removed = 0;
    for (const auto& root : roots) {
        const std::string slug = slugify(root.canonical);
        require_file(out_path(config, "trees/" + slug + ".json"), "crawl");
        auto t = tree::deserialize_tree(out_path(config, "trees/" + slug + ".json"));
        // variant lists may have been edited after the crawl; re-apply
        t.root_term = root;
        const size_t removed = tree::prune(t);
        total_removed += removed;
        tree::serialize_tree(t, out_path(config, "pruned/" + slug + ".json"));
        summary["trees"].push_back({{"root", root.canonical}, {"removed", removed}});
    }
    summary["total_removed"] = total_removed;
    std::ofstream out(out_path(config, "prune_summary.json"), std::ios::binary);
    out << summary.dump(2) << '\n';
}

void cmd_preprocess(const RunConfig& config) {
    config.validate();
    auto roots = load_roots(config);
    std::vector<tree::SuggestionTree> trees;
    for (const auto& root : roots) {
        const std::string path = out_path(config, "pruned/" + slugify(root.canonical) + ".json");
        require_file(path, "prune");
        trees.push_back(tree::deserialize_tree(path));
    }
    std::set<std::string> stopwords;
    if (!config.stopwords_path.empty()) stopwords = preprocess::load_stopwords(config.stopwords_path);

    auto corpus = preprocess::build_corpus(trees, stopwords);
    std::vector<std::string> drops;
    for (const auto& d : config.drop_roots) drops.push_back(text::normalize(d));
    preprocess::drop_ambiguous_roots(corpus, drops);
    preprocess::save_corpus(corpus, out_path(config, "corpus.jsonl"),
                            out_path(config, "stages.json"), config.config_hash);
}

void cmd_vectorize(const RunConfig& config) {
    config.validate();
    require_file(out_path(config, "corpus.jsonl"), "preprocess");
    if (config.vectors_path.empty()) throw std::runtime_error("config: vectors path required");
    auto corpus =
        preprocess::load_corpus(out_path(config, "corpus.jsonl"), out_path(config, "stages.json"));
    auto store = embedding::load_vectors(config.vectors_path);

    // One vector per global-unique stripped text; tokens from any record.
    std::map<std::string, const preprocess::ProcessedSuggestion*> unique;
    for (const auto& [root, suggestions] : corpus.per_root)
        for (const auto& s : suggestions)
            if (!unique.count(s.stripped)) unique[s.stripped] = &s;

    size_t kept = 0;
    {
        std::ofstream out(out_path(config, "suggestion_vectors.jsonl"), std::ios::binary);
        for (const auto& [stripped, ps] : unique) {
            if (ps->tokens.empty()) continue;  // reduced to stopwords
            auto vec = embedding::embed(ps->tokens, store);
            if (!vec) continue;  // OOV token: drop
            ordered_json j;
            j["id"] = stripped;
            j["tokens"] = ps->tokens;
            j["vector"] = *vec;
            out << j.dump() << '\n';
            ++kept;
        }
    }
    corpus.stage_counts.emplace_back("no-vector-removal", kept);
    preprocess::save_corpus(corpus, out_path(config, "corpus.jsonl"),
                            out_path(config, "stages.json"), config.config_hash);
}

void cmd_cluster(const RunConfig& config) {
    config.validate();
    require_file(out_path(config, "suggestion_vectors.jsonl"), "vectorize");
    auto data = load_suggestion_vectors(out_path(config, "suggestion_vectors.jsonl"));
    if (data.vectors.empty()) throw std::runtime_error("cmd_cluster: no suggestion vectors");

    const uint64_t seed = derive_seed(config.seed, "kmeans");
    int k = config.fixed_k.value_or(0);
    if (!config.fixed_k) {
        const int k_max = std::min<int>(config.k_max, static_cast<int>(data.vectors.size()));
        auto diag = clustering::select_k(data.vectors, config.k_min, k_max, seed);
        ordered_json j;
        j["config_hash"] = config.config_hash;
        j["chosen_k"] = diag.chosen_k;
        j["per_k"] = ordered_json::array();
        for (const auto& row : diag.per_k) {
            ordered_json r;
            r["k"] = row.k;
            r["sse"] = row.sse;
            if (row.k >= 2) r["mean_silhouette"] = row.mean_silhouette;
            j["per_k"].push_back(r);
        }
        std::ofstream out(out_path(config, "kselect.json"), std::ios::binary);
        out << j.dump(2) << '\n';
        k = diag.chosen_k;
    }

    auto model = clustering::kmeans(data.vectors, k, seed);
    ordered_json mj;
    mj["config_hash"] = config.config_hash;
    mj["k"] = model.k;
    mj["dim"] = data.vectors.front().size();
    mj["seed"] = model.seed;
    mj["sse"] = model.sse;
    mj["centroids"] = model.centroids;
    std::ofstream mout(out_path(config, "cluster_model.json"), std::ios::binary);
    mout << mj.dump(2) << '\n';

    std::ofstream aout(out_path(config, "assignments.jsonl"), std::ios::binary);
    for (size_t i = 0; i < data.ids.size(); ++i) {
        ordered_json j;
        j["suggestion_id"] = data.ids[i];
        j["cluster"] = model.assignments[i];
        aout << j.dump() << '\n';
    }

    auto evidence = clustering::label_clusters(model, data.vectors, data.tokens, 10);
    ordered_json ej;
    ej["config_hash"] = config.config_hash;
    ej["clusters"] = ordered_json::array();
    for (int c = 0; c < model.k; ++c) {
        ordered_json cj;
        cj["cluster"] = c;
        cj["nearest"] = ordered_json::array();
        for (size_t id : evidence[c].nearest_ids) cj["nearest"].push_back(data.ids[id]);
        cj["top_tokens"] = ordered_json::array();
        for (const auto& [tok, n] : evidence[c].top_tokens)
            cj["top_tokens"].push_back({{"token", tok}, {"count", n}});
        ej["clusters"].push_back(cj);
    }
    std::ofstream eout(out_path(config, "cluster_evidence.json"), std::ios::binary);
    eout << ej.dump(2) << '\n';
}

std::vector<regression::ShareVector> compute_shares(
    const preprocess::AuditCorpus& corpus,
    const std::map<std::string, int>& assignment_by_stripped, int k) {
    std::vector<regression::ShareVector> shares;
    for (const auto& [root, suggestions] : corpus.per_root) {
        regression::ShareVector sv;
        sv.metadata_key = root;
        sv.shares.assign(k, 0.0);
        for (const auto& s : suggestions) {
            auto it = assignment_by_stripped.find(s.stripped);
            if (it == assignment_by_stripped.end()) continue;  // dropped at vectorization
            sv.shares.at(it->second) += 1.0;
            ++sv.n_suggestions;
        }
        if (sv.n_suggestions > 0)
            for (double& v : sv.shares) v /= sv.n_suggestions;
        shares.push_back(std::move(sv));
    }
    return shares;
}

void cmd_analyze(const RunConfig& config) {
    config.validate();
    require_file(out_path(config, "assignments.jsonl"), "cluster");
    require_file(out_path(config, "cluster_model.json"), "cluster");
    auto corpus =
        preprocess::load_corpus(out_path(config, "corpus.jsonl"), out_path(config, "stages.json"));

    std::map<std::string, int> assignment;
    int k = 0;
    {
        std::ifstream in(out_path(config, "assignments.jsonl"), std::ios::binary);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            const int c = j.at("cluster").get<int>();
            assignment[j.at("suggestion_id").get<std::string>()] = c;
            k = std::max(k, c + 1);
        }
    }

    auto rows = load_metadata_csv(config.roots_file);
    std::vector<regression::PoliticianMeta> metas;
    std::set<std::string> known;
    for (const auto& r : rows) {
        metas.push_back(r.meta);
        known.insert(r.meta.name);
    }
    for (const auto& [root, _] : corpus.per_root)
        if (!known.count(root))
            throw std::runtime_error("cmd_analyze: clustered suggestions for '" + root +
                                     "' have no politician metadata");

    auto shares = compute_shares(corpus, assignment, k);
    auto report = regression::audit_bias(shares, metas, config.alpha, config.mode);

    ordered_json j;
    j["config_hash"] = config.config_hash;
    j["mode"] = report.mode;
    j["alpha"] = report.alpha;
    j["n"] = report.n;
    j["rows"] = ordered_json::array();
    for (const auto& r : report.rows) {
        j["rows"].push_back({{"attribute", r.attribute},
                             {"dependent", r.dependent},
                             {"effect", r.effect},
                             {"r_squared", r.r_squared},
                             {"p_value", r.p_value},
                             {"significant", r.significant}});
    }
    std::ofstream out(out_path(config, "report.json"), std::ios::binary);
    out << j.dump(2) << '\n';

    // Emit the appendix-schema CSV with the observed counts filled in.
    std::map<std::string, regression::ShareVector*> by_key;
    for (auto& s : shares) by_key[s.metadata_key] = &s;
    for (auto& r : rows) {
        auto it = by_key.find(r.meta.name);
        if (it == by_key.end()) continue;
        const auto& sv = *it->second;
        r.google_suggestions = sv.n_suggestions;
        r.cluster_counts.assign(3, std::nullopt);
        for (int c = 0; c < std::min<int>(3, k); ++c)
            r.cluster_counts[c] =
                static_cast<int>(std::lround(sv.shares[c] * sv.n_suggestions));
    }
    write_metadata_csv(rows, out_path(config, "metadata_out.csv"));
}

// ---------------------------------------------------------------- report

namespace {

std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

std::string render_report_text(const regression::BiasReport& report,
                               const std::string& config_hash) {
    // column order: dependents as first seen in the rows
    std::vector<std::string> deps;
    std::vector<std::string> attrs;
    for (const auto& r : report.rows) {
        if (std::find(deps.begin(), deps.end(), r.dependent) == deps.end())
            deps.push_back(r.dependent);
        if (std::find(attrs.begin(), attrs.end(), r.attribute) == attrs.end())
            attrs.push_back(r.attribute);
    }
    std::map<std::pair<std::string, std::string>, const regression::ReportRow*> cell;
    for (const auto& r : report.rows) cell[{r.attribute, r.dependent}] = &r;

    const int name_w = 22, col_w = 18;
    std::ostringstream out;
    out << "# bias report  config=" << config_hash << "  mode=" << report.mode
        << "  alpha=" << fmt3(report.alpha) << "  n=" << report.n << "\n";
    out << "# signed R2 carries the direction of the effect; '*' marks p <= alpha\n";
    auto pad = [&](const std::string& s, int w) {
        std::string t = s;
        if (static_cast<int>(t.size()) < w) t.append(w - t.size(), ' ');
        return t;
    };
    out << pad("attribute", name_w);
    for (const auto& d : deps) out << "| " << pad(d, col_w);
    out << "\n" << pad("", name_w);
    for (size_t i = 0; i < deps.size(); ++i) out << "| " << pad("R2       p", col_w);
    out << "\n";
    for (const auto& a : attrs) {
        out << pad(a, name_w);
        for (const auto& d : deps) {
            auto it = cell.find({a, d});
            if (it == cell.end()) {
                out << "| " << pad("-", col_w);
                continue;
            }
            const auto& r = *it->second;
            const double signed_r2 = std::copysign(r.r_squared, r.effect);
            std::string s = fmt3(signed_r2) + (r.significant ? "*" : " ") + " " + fmt3(r.p_value) +
                            (r.significant ? "*" : "");
            out << "| " << pad(s, col_w);
        }
        out << "\n";
    }
    return out.str();
}

std::string render_report_csv(const regression::BiasReport& report) {
    std::ostringstream out;
    out << "attribute,dependent,effect,r_squared,p_value,significant\n";
    for (const auto& r : report.rows) {
        out << csv_escape(r.attribute) << ',' << r.dependent << ',' << fmt6(r.effect) << ','
            << fmt6(r.r_squared) << ',' << fmt6(r.p_value) << ','
            << (r.significant ? "true" : "false") << '\n';
    }
    return out.str();
}

void cmd_report(const RunConfig& config) {
    config.validate();
    require_file(out_path(config, "report.json"), "analyze");
    std::ifstream in(out_path(config, "report.json"), std::ios::binary);
    json j = json::parse(in);

    regression::BiasReport report;
    report.alpha = j.at("alpha").get<double>();
    report.mode = j.at("mode").get<std::string>();
    report.n = j.at("n").get<int>();
    for (const auto& r : j.at("rows")) {
        regression::ReportRow row;
        row.attribute = r.at("attribute").get<std::string>();
        row.dependent = r.at("dependent").get<std::string>();
        row.effect = r.at("effect").get<double>();
        row.r_squared = r.at("r_squared").get<double>();
        row.p_value = r.at("p_value").get<double>();
        row.significant = r.at("significant").get<bool>();
        report.rows.push_back(row);
    }

    std::ofstream csv(out_path(config, "report.csv"), std::ios::binary);
    csv << "# config=" << j.at("config_hash").get<std::string>() << '\n'
        << render_report_csv(report);
    std::ofstream txt(out_path(config, "report.txt"), std::ios::binary);
    txt << render_report_text(report, j.at("config_hash").get<std::string>());
}

void cmd_run(const RunConfig& config, bool resume) {
    cmd_crawl(config, resume);
    cmd_prune(config);
    cmd_preprocess(config);
    cmd_vectorize(config);
    cmd_cluster(config);
    cmd_analyze(config);
    cmd_report(config);
}

void cmd_record_fixture(const RunConfig& config, const std::string& out_file) {
    config.validate();
    auto roots = load_roots(config);
    auto src = make_source(config);
    const auto alphabet = alphabet_of(config);
    std::vector<source::Query> queries;
    for (const auto& root : roots)
        for (auto& q : tree::expand_root(root, alphabet, config.locale)) queries.push_back(q);
    source::record_fixture(*src, queries, out_file);
}

// ------------------------------------------------------------------ lock

DirLock::DirLock(const std::string& output_dir) {
    fs::create_directories(output_dir);
    path_ = output_dir + "/.lock";
    if (fs::exists(path_))
        throw std::runtime_error("output dir locked by another run: " + path_);
    std::ofstream out(path_);
    out << "locked\n";
}

DirLock::~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

}  // namespace audit::pipeline
