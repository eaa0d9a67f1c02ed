// Acceptance harness: one PASS/FAIL line per criterion, exit code is
// the number of failures. argv[1] is the fixture directory;
// `--emit-golden` regenerates the golden report file there.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "audit/clustering.hpp"
#include "audit/pipeline.hpp"
#include "audit/regression.hpp"
#include "audit/source.hpp"
#include "audit/tree.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace audit;
using audit::source::ReplaySource;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g_data_dir;
int g_failures = 0;

void report(int id, const std::string& title, bool ok, double seconds,
            const std::string& detail = "") {
    std::printf("%s %d: %s (%.2f s)%s%s\n", ok ? "PASS" : "FAIL", id, title.c_str(), seconds,
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!ok) ++g_failures;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

bool close_to(double a, double b, double tol) {
    return std::fabs(a - b) <= tol * std::max(1.0, std::fabs(b));
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "";
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ------------------------------------------------------------ criterion 1

void criterion_1() {
    Timer timer;
    std::vector<std::string> az;
    for (char c = 'a'; c <= 'z'; ++c) az.emplace_back(1, c);
    auto seeds = tree::expand_root(tree::RootTerm::make("olaf scholz", {}, "olaf scholz"), az);
    bool ok = seeds.size() == 27;
    // each seed query can return at most 10 suggestions; the root's own
    // 10 live one level deeper, so first-layer capacity is 26*10 + 10
    const size_t capacity = (seeds.size() - 1) * 10 + 10;
    ok = ok && capacity == 270;
    ok = ok && seeds[0].text == "olaf scholz" && seeds[1].text == "olaf scholz a" &&
         seeds[26].text == "olaf scholz z";
    const double s = timer.seconds();
    report(1, "expand_root yields 27 seeds, 270 first-layer capacity", ok && s < 1.0, s);
}

// ------------------------------------------------------------ criterion 2

std::map<std::string, std::vector<std::string>> random_graph(std::mt19937_64& rng, int n_queries,
                                                             int max_children) {
    std::vector<std::string> universe;
    for (int i = 0; i < n_queries; ++i) universe.push_back("q" + std::to_string(i));
    std::map<std::string, std::vector<std::string>> graph;
    std::uniform_int_distribution<int> n_children(0, max_children);
    for (const auto& q : universe) {
        std::set<std::string> children;
        const int m = n_children(rng);
        for (int j = 0; j < m; ++j) children.insert(universe[rng() % universe.size()]);
        graph[q] = {children.begin(), children.end()};
    }
    return graph;
}

void criterion_2() {
    Timer timer;
    std::mt19937_64 rng(90210);
    bool ok = true;
    std::string detail;
    for (int trial = 0; trial < 100 && ok; ++trial) {
        auto graph = random_graph(rng, 30 + static_cast<int>(rng() % 120),
                                  2 + static_cast<int>(rng() % 7));
        const int max_depth = 1 + static_cast<int>(rng() % 6);
        std::vector<std::string> alphabet;
        std::vector<std::string> seeds;
        if (rng() % 2 == 0) {
            alphabet = {"a", "b"};
            seeds = {"q0 a", "q0 b"};
        }
        ReplaySource src(graph);
        auto t = tree::build_tree(tree::RootTerm::make("q0", {}, "q0"), src, max_depth, alphabet);
        if (t.node_count() > 5000) {
            ok = false;
            detail = "node bound exceeded";
            break;
        }
        std::multiset<std::pair<std::string, int>> got;
        t.visit([&](const tree::TreeNode& n) { got.insert({n.query, n.depth}); });
        std::multiset<std::pair<std::string, int>> want;
        for (const auto& n : oracle::bfs_oracle(graph, "q0", seeds, max_depth))
            want.insert({n.query, n.depth});
        if (got != want) {
            ok = false;
            detail = "trial " + std::to_string(trial) + " diverged from BFS oracle";
        }
    }
    // a dense cyclic fixture must terminate
    ReplaySource cyc({{"q0", {"q1"}}, {"q1", {"q0", "q2"}}, {"q2", {"q1"}}});
    auto t = tree::build_tree(tree::RootTerm::make("q0", {}, "q0"), cyc, 50, {});
    ok = ok && t.node_count() == 5;
    const double s = timer.seconds();
    report(2, "build_tree equals BFS oracle on 100 random graphs, cycles terminate",
           ok && s < 30.0, s, detail);
}

// ------------------------------------------------------------ criterion 3

void prune_oracle(tree::TreeNode& n, const std::vector<std::string>& variants) {
    std::function<void(tree::TreeNode&)> mark = [&](tree::TreeNode& node) {
        if (node.origin == tree::Origin::suggestion) {
            bool found = false;
            for (const auto& v : variants)
                if (node.query.find(v) != std::string::npos) found = true;
            node.pruned = !found;
        }
        for (auto& c : node.children) mark(c);
    };
    std::function<void(tree::TreeNode&, bool)> propagate = [&](tree::TreeNode& node, bool anc) {
        if (anc) node.pruned = true;
        for (auto& c : node.children) propagate(c, node.pruned);
    };
    mark(n);
    propagate(n, false);
}

// 8,899-node tree with exactly 210 planted off-topic leaves
tree::SuggestionTree planted_prune_fixture() {
    const std::string rootname = "max muster";
    tree::SuggestionTree t;
    t.root_term = tree::RootTerm::make(rootname, {}, rootname);
    t.root = tree::TreeNode{rootname, "", 0, tree::Origin::root, false, {}};
    t.max_depth = 3;

    size_t good = 8899 - 1 - 210;  // nodes containing the root term
    int counter = 0;
    t.root.children.reserve(100);
    for (int i = 0; i < 100 && good > 0; ++i) {
        t.root.children.push_back(tree::TreeNode{
            rootname + " a" + std::to_string(i), "a" + std::to_string(i), 1,
            tree::Origin::suggestion, false, {}});
        --good;
    }
    size_t branch = 0;
    while (good > 0) {
        auto& parent = t.root.children[branch % t.root.children.size()];
        parent.children.push_back(tree::TreeNode{
            rootname + " b" + std::to_string(counter), "b" + std::to_string(counter), 2,
            tree::Origin::suggestion, false, {}});
        ++counter;
        ++branch;
        --good;
    }
    for (int i = 0; i < 210; ++i) {
        auto& parent = t.root.children[i % t.root.children.size()];
        parent.children.push_back(tree::TreeNode{"thema t" + std::to_string(i), "", 2,
                                                 tree::Origin::suggestion, false, {}});
    }
    return t;
}

void criterion_3() {
    Timer timer;
    std::mt19937_64 rng(5150);
    bool ok = true;
    std::string detail;
    for (int trial = 0; trial < 100 && ok; ++trial) {
        std::map<std::string, std::vector<std::string>> graph;
        std::vector<std::string> frontier = {"maria muster"};
        int counter = 0;
        for (int level = 0; level < 3; ++level) {
            std::vector<std::string> next;
            for (const auto& q : frontier) {
                std::vector<std::string> children;
                const int m = static_cast<int>(rng() % 5);
                for (int j = 0; j < m; ++j) {
                    const bool keep_root = rng() % 3 != 0;
                    std::string child = (keep_root ? std::string("maria muster ")
                                                   : std::string("thema ")) +
                                        "t" + std::to_string(counter++);
                    children.push_back(child);
                    next.push_back(child);
                }
                graph[q] = children;
            }
            frontier = next;
        }
        ReplaySource src(graph);
        auto t = tree::build_tree(tree::RootTerm::make("maria muster", {}, "maria muster"), src, 4,
                                  {"a"});
        auto reference = t;
        prune_oracle(reference.root, reference.root_term.variants);
        tree::prune(t);
        std::vector<std::pair<std::string, bool>> got, want;
        t.visit([&](const tree::TreeNode& n) { got.emplace_back(n.query, n.pruned); });
        reference.visit([&](const tree::TreeNode& n) { want.emplace_back(n.query, n.pruned); });
        if (got != want || tree::prune(t) != 0) {
            ok = false;
            detail = "trial " + std::to_string(trial) + " diverged from prune oracle";
        }
    }

    auto planted = planted_prune_fixture();
    const bool size_ok = planted.node_count() == 8899;
    const size_t removed = tree::prune(planted);
    if (!size_ok || removed != 210) {
        ok = false;
        detail = "planted fixture: nodes=" + std::to_string(planted.node_count()) +
                 " removed=" + std::to_string(removed);
    }
    const double s = timer.seconds();
    report(3, "prune equals two-pass oracle; planted 210-of-8899 fixture", ok && s < 10.0, s,
           detail);
}

// ------------------------------------------------------------ criterion 4

void criterion_4() {
    Timer timer;
    std::mt19937_64 rng(1234);
    std::normal_distribution<double> normal(0.0, 1.0);
    bool ok = true;
    std::string detail;

    for (int trial = 0; trial < 1000 && ok; ++trial) {
        const int p = 1 + static_cast<int>(rng() % 8);
        const int n = p + 3 + static_cast<int>(rng() % (100 - p - 2));
        std::vector<std::vector<double>> cols(p, std::vector<double>(n));
        std::vector<std::string> names;
        for (int j = 0; j < p; ++j) {
            names.push_back("x" + std::to_string(j));
            const bool binary = rng() % 3 == 0;
            for (int i = 0; i < n; ++i)
                cols[j][i] = binary ? static_cast<double>(rng() % 2) : normal(rng);
        }
        std::vector<double> y(n);
        for (int i = 0; i < n; ++i) {
            y[i] = 0.5 * normal(rng);
            for (int j = 0; j < p; ++j) y[i] += (j % 2 ? -0.3 : 0.7) * cols[j][i];
        }
        regression::OlsFit fit;
        try {
            fit = regression::ols(cols, y, names);
        } catch (const std::invalid_argument&) {
            continue;  // binary columns can collide; rank deficiency is rejected
        }
        auto ref = oracle::ols_oracle(cols, y);
        for (int j = 0; j <= p && ok; ++j) {
            const auto& c = fit.coefficients[j];
            if (!close_to(c.beta, static_cast<double>(ref.beta[j]), 1e-8) ||
                !close_to(c.stderr_, static_cast<double>(ref.stderr_[j]), 1e-8) ||
                !close_to(c.t_stat, static_cast<double>(ref.t_stat[j]), 1e-8) ||
                !close_to(c.p_value,
                          static_cast<double>(oracle::two_sided_p_oracle(ref.t_stat[j], ref.dof)),
                          1e-8)) {
                ok = false;
                detail = "ols trial " + std::to_string(trial) + " coefficient " + std::to_string(j);
            }
        }
        if (ok && !close_to(fit.r_squared, static_cast<double>(ref.r_squared), 1e-8)) {
            ok = false;
            detail = "ols trial " + std::to_string(trial) + " r_squared";
        }
    }

    for (int trial = 0; trial < 60 && ok; ++trial) {
        const int n = 10 + static_cast<int>(rng() % 191);
        const int k = 2 + static_cast<int>(rng() % 4);
        const int dim = 2 + static_cast<int>(rng() % 4);
        std::vector<clustering::Vec> pts(n, clustering::Vec(dim));
        std::vector<int> assign(n);
        for (int i = 0; i < n; ++i) {
            assign[i] = i < k ? i : static_cast<int>(rng() % k);  // every cluster non-empty
            for (double& v : pts[i]) v = normal(rng) + 3.0 * assign[i];
        }
        const double got = clustering::silhouette(pts, assign);
        const double want = oracle::silhouette_oracle(pts, assign);
        if (std::fabs(got - want) > 1e-9) {
            ok = false;
            detail = "silhouette trial " + std::to_string(trial);
        }
    }

    for (int trial = 0; trial < 20 && ok; ++trial) {
        const int n = 30 + static_cast<int>(rng() % 120);
        std::vector<clustering::Vec> pts(n, clustering::Vec(3));
        for (auto& v : pts)
            for (double& x : v) x = normal(rng);
        auto model = clustering::kmeans(pts, 2 + static_cast<int>(rng() % 4), rng());
        for (size_t i = 1; i < model.iteration_sse.size(); ++i)
            if (model.iteration_sse[i] > model.iteration_sse[i - 1] + 1e-9) {
                ok = false;
                detail = "kmeans SSE increased at iteration " + std::to_string(i);
            }
    }
    const double s = timer.seconds();
    report(4, "OLS/silhouette match oracles; k-means SSE non-increasing", ok && s < 60.0, s,
           detail);
}

// ------------------------------------------------------------ criterion 5

std::vector<regression::PoliticianMeta> load_metas() {
    auto rows = pipeline::load_metadata_csv(g_data_dir + "/metadata_54.csv");
    std::vector<regression::PoliticianMeta> metas;
    for (const auto& r : rows) metas.push_back(r.meta);
    return metas;
}

std::vector<regression::ShareVector> synth_shares(const std::vector<regression::PoliticianMeta>& metas,
                                                  double plant, std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0.0, 0.05);
    std::vector<regression::ShareVector> shares;
    for (const auto& m : metas) {
        const double f = m.gender == "female" ? 1.0 : 0.0;
        regression::ShareVector sv;
        sv.metadata_key = m.name;
        const double c1 = 0.30 + plant * f + noise(rng);
        const double c0 = 0.35 - 0.05 * f + noise(rng);
        sv.shares = {c0, c1, 1.0 - c0 - c1};
        sv.n_suggestions = 150;
        shares.push_back(sv);
    }
    return shares;
}

bool female_c1_flag(const regression::BiasReport& report, bool& positive) {
    for (const auto& r : report.rows)
        if (r.attribute == "gender:female" && r.dependent == "cluster-1") {
            positive = r.effect > 0.0;
            return r.significant;
        }
    positive = false;
    return false;
}

void criterion_5() {
    Timer timer;
    auto metas = load_metas();
    bool ok = metas.size() == 54;
    std::string detail;

    int powered = 0;
    std::mt19937_64 rng(987654321);
    for (int seed = 0; seed < 100; ++seed) {
        auto report = regression::audit_bias(synth_shares(metas, 0.2, rng), metas, 0.05,
                                             regression::AuditMode::univariate);
        bool positive = false;
        if (female_c1_flag(report, positive) && positive) ++powered;
    }
    if (powered < 95) {
        ok = false;
        detail = "power " + std::to_string(powered) + "/100";
    }

    int false_flags = 0;
    const int null_runs = 5000;
    for (int seed = 0; seed < null_runs; ++seed) {
        auto report = regression::audit_bias(synth_shares(metas, 0.0, rng), metas, 0.05,
                                             regression::AuditMode::univariate);
        bool positive = false;
        if (female_c1_flag(report, positive)) ++false_flags;
    }
    const double rate = static_cast<double>(false_flags) / null_runs;
    if (std::fabs(rate - 0.05) > 0.02) {
        ok = false;
        detail += std::string(detail.empty() ? "" : "; ") + "null false-flag rate " +
                  std::to_string(rate);
    }
    const double s = timer.seconds();
    char buf[96];
    std::snprintf(buf, sizeof(buf), "power %d/100, null rate %.3f", powered, rate);
    report(5, "planted bias flagged, null calibrated at alpha", ok && s < 300.0, s,
           detail.empty() ? std::string(buf) : detail);
}

// ------------------------------------------------------------ criterion 6

void criterion_6() {
    Timer timer;
    bool ok = true;
    std::string detail;
    int hits = 0;
    for (int seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(777 + seed);
        std::normal_distribution<double> noise(0.0, 0.5);
        const double centers[3][2] = {{0, 0}, {10, 0}, {0, 10}};
        std::vector<clustering::Vec> pts;
        for (int c = 0; c < 3; ++c)
            for (int i = 0; i < 60; ++i)
                pts.push_back({centers[c][0] + noise(rng), centers[c][1] + noise(rng)});
        auto diag = clustering::select_k(pts, 1, 10, 31000 + seed);
        if (diag.chosen_k == 3) ++hits;
    }
    if (hits != 100) {
        ok = false;
        detail = "chose k=3 in " + std::to_string(hits) + "/100 seeds";
    }
    const double s = timer.seconds();
    report(6, "select_k picks k=3 on planted blobs in 100/100 seeds", ok && s < 60.0, s, detail);
}

// ------------------------------------------------------------ criterion 7

std::string make_workspace(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);

    const std::vector<std::string> politics = {"wahl", "partei", "minister", "bundestag",
                                               "gesetz", "steuer"};
    const std::vector<std::string> personal = {"ehefrau", "kinder", "haus", "urlaub",
                                               "hobby", "friseur"};
    std::ofstream csv(dir / "roots.csv");
    csv << "name,google-suggestions,cluster-0,cluster-1,cluster-2,gender,party,"
           "year-of-birth,pol-role\n";
    json root_groups;
    const char* parties[] = {"SPD", "CDU", "CSU", "FDP", "AFD", "Left", "Greens"};
    const char* roles[] = {"minister-2021", "minister-2017", "prime-minister", "party-leader"};
    for (int i = 0; i < 16; ++i) {
        const bool female = i < 6;
        const std::string nm = "person nr" + std::to_string(i);
        csv << nm << ",,,,," << (female ? "female" : "male") << ',' << parties[i % 7] << ','
            << 1950 + i << ',' << roles[i % 4] << '\n';
        root_groups[nm] = female ? "politiknah" : "privatnah";
    }
    csv.close();

    json spec;
    spec["groups"] = {{"politiknah", {{"politik", 0.85}, {"privat", 0.15}}},
                      {"privatnah", {{"politik", 0.15}, {"privat", 0.85}}}};
    spec["vocabulary"] = {{"politik", politics}, {"privat", personal}};
    spec["branching"] = 3;
    spec["depth_decay"] = 1.0;
    spec["rng_seed"] = 9;
    spec["root_groups"] = root_groups;
    std::ofstream(dir / "spec.json") << spec.dump(2);

    std::ofstream sw(dir / "stopwords.txt");
    for (char c = 'a'; c <= 'z'; ++c) sw << c << '\n';
    sw.close();

    std::ofstream vec(dir / "vectors.txt");
    vec << politics.size() + personal.size() << " 3\n";
    for (size_t i = 0; i < politics.size(); ++i) vec << politics[i] << " 10 0 " << 0.1 * i << "\n";
    for (size_t i = 0; i < personal.size(); ++i) vec << personal[i] << " 0 10 " << 0.1 * i << "\n";
    vec.close();

    json config;
    config["roots_file"] = (dir / "roots.csv").string();
    config["source"] = {{"type", "synthetic"}, {"spec_path", (dir / "spec.json").string()}};
    config["max_depth"] = 2;
    config["alphabet"] = {"a"};
    config["locale"] = "de";
    config["stopwords"] = (dir / "stopwords.txt").string();
    config["vectors"] = (dir / "vectors.txt").string();
    config["k"] = 2;
    config["seed"] = 4242;
    config["alpha"] = 0.05;
    config["mode"] = "univariate";
    config["output_dir"] = (dir / "out").string();
    const std::string config_path = (dir / "config.json").string();
    std::ofstream(config_path) << config.dump(2);
    return config_path;
}

void criterion_7() {
    Timer timer;
    bool ok = true;
    std::string detail;
    const std::string cfg = make_workspace("acc_det");
    auto config = pipeline::RunConfig::load(cfg);
    pipeline::cmd_run(config);
    const fs::path snap = fs::path(config.output_dir).parent_path() / "snapshot";
    fs::copy(config.output_dir, snap, fs::copy_options::recursive);
    fs::remove_all(config.output_dir);
    pipeline::cmd_run(config);

    for (const auto& f : {"corpus.jsonl", "suggestion_vectors.jsonl", "cluster_model.json",
                          "assignments.jsonl", "report.json", "report.csv", "report.txt"}) {
        const std::string fa = slurp(config.output_dir + "/" + std::string(f));
        if (fa.empty() || fa != slurp((snap / f).string())) {
            ok = false;
            detail = std::string(f) + " differs";
        }
    }
    for (const auto& entry : fs::directory_iterator(config.output_dir + "/trees")) {
        const std::string name = entry.path().filename().string();
        if (slurp(entry.path().string()) != slurp((snap / "trees" / name).string())) {
            ok = false;
            detail = "tree " + name + " differs";
        }
    }
    const double s = timer.seconds();
    report(7, "two synthetic runs are byte-identical", ok, s, detail);
}

// ------------------------------------------------------------ criterion 8

std::string metadata_report_text() {
    auto rows = pipeline::load_metadata_csv(g_data_dir + "/metadata_54.csv");
    std::vector<regression::PoliticianMeta> metas;
    std::vector<regression::ShareVector> shares;
    for (const auto& r : rows) {
        metas.push_back(r.meta);
        regression::ShareVector sv;
        sv.metadata_key = r.meta.name;
        sv.n_suggestions = r.google_suggestions.value();
        for (int c = 0; c < 3; ++c)
            sv.shares.push_back(static_cast<double>(r.cluster_counts[c].value()) /
                                sv.n_suggestions);
        shares.push_back(sv);
    }
    auto report =
        regression::audit_bias(shares, metas, 0.05, regression::AuditMode::univariate);
    return pipeline::render_report_text(report, "metadata-54");
}

void criterion_8(bool emit_golden) {
    Timer timer;
    const std::string golden_path = g_data_dir + "/golden_report.txt";
    const std::string text = metadata_report_text();
    if (emit_golden) {
        std::ofstream(golden_path, std::ios::binary) << text;
        std::printf("wrote %s\n", golden_path.c_str());
        return;
    }
    const std::string golden = slurp(golden_path);
    bool ok = !golden.empty() && text == golden;
    std::string detail = golden.empty() ? "golden file missing" : "";
    // the rendered table must cover every dependent the schema promises
    for (const auto& dep : {"cluster-0", "cluster-1", "cluster-2", "n-suggestions"})
        if (text.find(dep) == std::string::npos) {
            ok = false;
            detail = std::string("dependent column missing: ") + dep;
        }
    report(8, "metadata CSV report is byte-stable against the golden file", ok, timer.seconds(),
           detail);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: acceptance <data-dir> [--emit-golden]\n");
        return 2;
    }
    g_data_dir = argv[1];
    const bool emit_golden = argc > 2 && std::string(argv[2]) == "--emit-golden";
    if (emit_golden) {
        criterion_8(true);
        return 0;
    }
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8(false);
    return g_failures;
}
