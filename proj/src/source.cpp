#include "audit/source.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "audit/common.hpp"
#include "audit/text.hpp"
#include "httplib.h"
#include "json.hpp"

namespace audit::source {

using nlohmann::json;

int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

Query Query::make(const std::string& raw, const std::string& locale) {
    Query q{text::normalize(raw), locale};
    if (q.text.empty()) throw std::invalid_argument("Query: text empty after normalization");
    return q;
}

void SourceConfig::validate() const {
    size_t first = endpoint_template.find("{q}");
    if (first == std::string::npos || endpoint_template.find("{q}", first + 1) != std::string::npos)
        throw std::invalid_argument("SourceConfig: endpoint_template needs exactly one {q}");
    if (timeout_ms <= 0) throw std::invalid_argument("SourceConfig: timeout_ms must be > 0");
    if (min_interval_ms < 0 || max_retries < 0)
        throw std::invalid_argument("SourceConfig: negative rate-limit settings");
}

namespace {

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
    size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

// Walks a slash-separated path through the parsed response.
const json* select_path(const json& root, const std::string& path) {
    const json* cur = &root;
    if (path.empty()) return cur;
    size_t start = 0;
    while (start <= path.size()) {
        size_t end = path.find('/', start);
        std::string seg = path.substr(start, end == std::string::npos ? std::string::npos : end - start);
        if (!seg.empty()) {
            if (cur->is_array()) {
                size_t idx = std::stoul(seg);
                if (idx >= cur->size()) return nullptr;
                cur = &(*cur)[idx];
            } else if (cur->is_object()) {
                auto it = cur->find(seg);
                if (it == cur->end()) return nullptr;
                cur = &*it;
            } else {
                return nullptr;
            }
        }
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return cur;
}

std::vector<std::string> dedupe_cap(const std::vector<std::string>& raw) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& s : raw) {
        std::string norm = text::normalize(s);
        if (norm.empty() || !seen.insert(norm).second) continue;
        out.push_back(norm);
        if (out.size() == 10) break;
    }
    return out;
}

}  // namespace

LiveSource::LiveSource(SourceConfig config) : config_(std::move(config)) { config_.validate(); }

std::vector<int64_t> LiveSource::request_log() const {
    std::lock_guard lock(gate_);
    return request_log_;
}

SuggestionList LiveSource::fetch(const Query& query) {
    std::string url = replace_all(config_.endpoint_template, "{q}", text::percent_encode(query.text));
    url = replace_all(url, "{hl}", query.locale.empty() ? config_.locale : query.locale);

    // Split scheme://host[:port] from the path.
    size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw std::invalid_argument("LiveSource: bad URL " + url);
    size_t path_start = url.find('/', scheme_end + 3);
    std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        {
            // Shared gate: dispatch times across all callers are spaced
            // by at least min_interval_ms.
            std::unique_lock lock(gate_);
            int64_t now = now_ms();
            int64_t wait = last_dispatch_ms_ + config_.min_interval_ms - now;
            if (last_dispatch_ms_ > 0 && wait > 0) {
                lock.unlock();
                std::this_thread::sleep_for(std::chrono::milliseconds(wait));
                lock.lock();
                now = now_ms();
            }
            last_dispatch_ms_ = now;
            request_log_.push_back(now);
        }

        httplib::Client client(base);
        client.set_connection_timeout(0, config_.timeout_ms * 1000);
        client.set_read_timeout(0, config_.timeout_ms * 1000);
        auto res = client.Get(path);
        if (!res) {
            last_error = "connection failed: " + httplib::to_string(res.error());
        } else if (res->status >= 500) {
            last_error = "server status " + std::to_string(res->status);
        } else if (res->status != 200) {
            throw ProtocolError("LiveSource: HTTP status " + std::to_string(res->status) +
                                " for query '" + query.text + "'");
        } else {
            json parsed;
            try {
                parsed = json::parse(res->body);
            } catch (const json::exception& e) {
                throw ProtocolError(std::string("LiveSource: bad JSON response: ") + e.what());
            }
            const json* arr = select_path(parsed, config_.response_path);
            if (!arr || !arr->is_array())
                throw ProtocolError("LiveSource: response path '" + config_.response_path +
                                    "' does not select an array");
            std::vector<std::string> raw;
            for (const auto& item : *arr)
                if (item.is_string()) raw.push_back(item.get<std::string>());
            return SuggestionList{query, dedupe_cap(raw), now_ms()};
        }
        if (attempt < config_.max_retries) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(config_.backoff_base_ms * (1LL << attempt)));
        }
    }
    throw TransportError("LiveSource: giving up on '" + query.text + "' after " +
                         std::to_string(config_.max_retries + 1) + " attempts: " + last_error);
}

ReplaySource::ReplaySource(std::map<std::string, std::vector<std::string>> fixture,
                           MissPolicy miss_policy)
    : miss_policy_(miss_policy) {
    for (auto& [k, v] : fixture) fixture_[text::normalize(k)] = dedupe_cap(v);
}

ReplaySource ReplaySource::from_file(const std::string& path, MissPolicy miss_policy) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("ReplaySource: cannot open " + path);
    json j = json::parse(in);
    std::map<std::string, std::vector<std::string>> fixture;
    for (const auto& [k, v] : j.items()) fixture[k] = v.get<std::vector<std::string>>();
    return ReplaySource(std::move(fixture), miss_policy);
}

SuggestionList ReplaySource::fetch(const Query& query) {
    ++fetch_count_;
    auto it = fixture_.find(query.text);
    if (it == fixture_.end()) {
        if (miss_policy_ == MissPolicy::hard_error)
            throw FixtureMissError("ReplaySource: no fixture entry for '" + query.text + "'");
        return SuggestionList{query, {}, 0};
    }
    return SuggestionList{query, it->second, 0};
}

void SyntheticBiasSpec::validate() const {
    if (branching < 1 || branching > 10)
        throw std::invalid_argument("SyntheticBiasSpec: branching must be in 1..10");
    if (depth_decay < 0.0 || depth_decay > 1.0)
        throw std::invalid_argument("SyntheticBiasSpec: depth_decay must be in [0,1]");
    for (const auto& [group, mixture] : group_mixtures) {
        double total = 0.0;
        for (const auto& [topic, p] : mixture) {
            if (!vocabulary.count(topic))
                throw std::invalid_argument("SyntheticBiasSpec: unknown topic '" + topic + "'");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument("SyntheticBiasSpec: mixture for '" + group +
                                        "' does not sum to 1");
    }
    for (const auto& [topic, terms] : vocabulary)
        if (terms.empty())
            throw std::invalid_argument("SyntheticBiasSpec: empty lexicon for '" + topic + "'");
    for (const auto& [root, group] : root_groups)
        if (!group_mixtures.count(group))
            throw std::invalid_argument("SyntheticBiasSpec: unknown group '" + group + "'");
}

SyntheticBiasSpec SyntheticBiasSpec::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("SyntheticBiasSpec: cannot open " + path);
    json j = json::parse(in);
    SyntheticBiasSpec spec;
    for (const auto& [group, mix] : j.at("groups").items())
        for (const auto& [topic, p] : mix.items()) spec.group_mixtures[group][topic] = p;
    for (const auto& [topic, terms] : j.at("vocabulary").items())
        spec.vocabulary[topic] = terms.get<std::vector<std::string>>();
    spec.branching = j.value("branching", 3);
    spec.depth_decay = j.value("depth_decay", 1.0);
    spec.rng_seed = j.value("rng_seed", 0ULL);
    if (j.contains("root_groups"))
        for (const auto& [root, group] : j.at("root_groups").items())
            spec.root_groups[text::normalize(root)] = group;
    spec.validate();
    return spec;
}

SyntheticSource::SyntheticSource(SyntheticBiasSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    for (const auto& [topic, terms] : spec_.vocabulary)
        for (const auto& t : terms) term_topic_[t] = topic;
}

std::string SyntheticSource::topic_of(const std::string& term) const {
    auto it = term_topic_.find(term);
    return it == term_topic_.end() ? std::string() : it->second;
}

std::string SyntheticSource::draw_term(const std::string& group, uint64_t draw_seed) const {
    const auto& mixture = spec_.group_mixtures.at(group);
    auto rng = make_rng(draw_seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double target = u(rng);
    const std::string* topic = nullptr;
    double acc = 0.0;
    for (const auto& [t, p] : mixture) {
        acc += p;
        topic = &t;
        if (target <= acc) break;
    }
    const auto& lexicon = spec_.vocabulary.at(*topic);
    std::uniform_int_distribution<size_t> pick(0, lexicon.size() - 1);
    return lexicon[pick(rng)];
}

SuggestionList SyntheticSource::fetch(const Query& query) {
    // Group of the root whose canonical prefixes this query.
    const std::string* group = nullptr;
    for (const auto& [root, g] : spec_.root_groups) {
        if (query.text.compare(0, root.size(), root) == 0 &&
            (query.text.size() == root.size() || query.text[root.size()] == ' ')) {
            group = &g;
        }
    }
    if (!group) return SuggestionList{query, {}, 0};

    const uint64_t qseed = derive_seed(spec_.rng_seed, "query:" + query.text);
    auto rng = make_rng(qseed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) > spec_.depth_decay) return SuggestionList{query, {}, 0};

    std::vector<std::string> suggestions;
    std::set<std::string> seen;
    int attempts = 0;
    while (static_cast<int>(suggestions.size()) < spec_.branching && attempts < spec_.branching * 8) {
        std::string term =
            draw_term(*group, derive_seed(qseed, "term-" + std::to_string(attempts)));
        ++attempts;
        std::string candidate = query.text + " " + term;
        if (seen.insert(candidate).second) suggestions.push_back(candidate);
    }
    return SuggestionList{query, suggestions, 0};
}

std::unique_ptr<SuggestionSource> synthesize_source(SyntheticBiasSpec spec) {
    return std::make_unique<SyntheticSource>(std::move(spec));
}

void record_fixture(SuggestionSource& src, const std::vector<Query>& queries,
                    const std::string& path) {
    if (queries.empty()) throw std::invalid_argument("record_fixture: no queries");
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    std::map<std::string, std::vector<std::string>> collected;
    for (const auto& q : queries) collected[q.text] = src.fetch(q).suggestions;
    for (const auto& [k, v] : collected) out[k] = v;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("record_fixture: cannot write " + path);
    f << out.dump(2) << '\n';
}

}  // namespace audit::source
