#include "audit/embedding.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "audit/text.hpp"

namespace audit::embedding {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Reads the whole file into lines, gunzipping when the name ends in .gz.
std::vector<std::string> read_lines(const std::string& path) {
    std::string content;
    if (ends_with(path, ".gz")) {
        gzFile f = gzopen(path.c_str(), "rb");
        if (!f) throw std::runtime_error("load_vectors: cannot open " + path);
        char buf[1 << 16];
        int n;
        while ((n = gzread(f, buf, sizeof(buf))) > 0) content.append(buf, n);
        gzclose(f);
    } else {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("load_vectors: cannot open " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        content = ss.str();
    }
    std::vector<std::string> lines;
    size_t start = 0;
    while (start <= content.size()) {
        size_t end = content.find('\n', start);
        if (end == std::string::npos) {
            if (start < content.size()) lines.push_back(content.substr(start));
            break;
        }
        lines.push_back(content.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

}  // namespace

VectorStore load_vectors(const std::string& path) {
    auto lines = read_lines(path);
    if (lines.empty()) throw std::runtime_error("load_vectors: empty file " + path);

    VectorStore store;
    size_t declared_vocab = 0;
    {
        std::istringstream header(lines[0]);
        if (!(header >> declared_vocab >> store.dim) || store.dim <= 0)
            throw std::runtime_error("load_vectors: bad header line 1");
    }

    // folded token -> original spelling of the entry currently stored
    std::unordered_map<std::string, std::string> originals;

    for (size_t ln = 1; ln < lines.size(); ++ln) {
        if (lines[ln].empty()) continue;
        std::istringstream in(lines[ln]);
        std::string token;
        if (!(in >> token))
            throw std::runtime_error("load_vectors: malformed line " + std::to_string(ln + 1));
        std::vector<double> vec(store.dim);
        for (int d = 0; d < store.dim; ++d) {
            if (!(in >> vec[d]))
                throw std::runtime_error("load_vectors: dimension mismatch at line " +
                                         std::to_string(ln + 1));
        }
        double extra;
        if (in >> extra)
            throw std::runtime_error("load_vectors: dimension mismatch at line " +
                                     std::to_string(ln + 1));

        const std::string folded = text::casefold(token);
        auto it = originals.find(folded);
        if (it == originals.end()) {
            originals[folded] = token;
            store.table[folded] = std::move(vec);
        } else if (it->second == token) {
            // exact duplicate: last wins
            std::cerr << "load_vectors: duplicate token '" << token << "' at line " << ln + 1
                      << ", keeping last\n";
            store.table[folded] = std::move(vec);
        }
        // case-fold collision with a different spelling: first-seen kept
    }
    return store;
}

void dump_vectors(const VectorStore& store, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("dump_vectors: cannot write " + path);
    out << store.table.size() << ' ' << store.dim << '\n';
    std::vector<std::string> keys;
    keys.reserve(store.table.size());
    for (const auto& [k, _] : store.table) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    char buf[64];
    for (const auto& k : keys) {
        out << k;
        for (double v : store.table.at(k)) {
            std::snprintf(buf, sizeof(buf), " %.6g", v);
            out << buf;
        }
        out << '\n';
    }
}

std::optional<std::vector<double>> embed(const std::vector<std::string>& tokens,
                                         const VectorStore& store) {
    if (tokens.empty()) throw std::invalid_argument("embed: empty token list");
    std::vector<double> sum(store.dim, 0.0);
    for (const auto& t : tokens) {
        auto it = store.table.find(text::casefold(t));
        if (it == store.table.end()) return std::nullopt;
        for (int d = 0; d < store.dim; ++d) sum[d] += it->second[d];
    }
    for (double& v : sum) v /= static_cast<double>(tokens.size());
    return sum;
}

}  // namespace audit::embedding
