#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace audit::embedding {

struct VectorStore {
    int dim = 0;
    // Keys are case-folded tokens.
    std::unordered_map<std::string, std::vector<double>> table;

    size_t vocab_size() const { return table.size(); }
    bool contains(const std::string& folded_token) const { return table.count(folded_token) > 0; }
};

// Parses the textual word-vector format: header "vocab_size dim", then
// one token and dim numbers per line. Files ending in .gz are
// decompressed transparently. Tokens are case-folded at load; an exact
// duplicate token wins last, a case-fold collision keeps the first.
// Throws std::runtime_error with the line number on malformed lines.
VectorStore load_vectors(const std::string& path);

// Writes the store back out in the same textual format (6 significant
// digits), tokens in sorted order.
void dump_vectors(const VectorStore& store, const std::string& path);

// Component-wise mean of the token vectors, or nullopt if any token is
// out of vocabulary (the suggestion is then dropped from the corpus).
// Throws std::invalid_argument on an empty token list.
std::optional<std::vector<double>> embed(const std::vector<std::string>& tokens,
                                         const VectorStore& store);

}  // namespace audit::embedding
