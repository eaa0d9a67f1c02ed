#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "audit/text.hpp"

using namespace audit;

TEST_CASE("whitespace normalization") {
    CHECK(text::normalize_whitespace("  olaf   scholz ") == "olaf scholz");
    CHECK(text::normalize_whitespace("\tannalena\nbaerbock") == "annalena baerbock");
    CHECK(text::normalize_whitespace("") == "");
    CHECK(text::normalize_whitespace("   ") == "");
}

TEST_CASE("casefold handles ascii and german umlauts") {
    CHECK(text::casefold("Olaf SCHOLZ") == "olaf scholz");
    CHECK(text::casefold("MÜLLER") == "müller");
    CHECK(text::casefold("Ärger Öl Übung") == "ärger öl übung");
    // multiplication sign is not a letter and must not shift
    CHECK(text::casefold("a×b") == "a×b");
}

TEST_CASE("tokenize and join round-trip") {
    auto tokens = text::tokenize("annalena baerbock alter");
    REQUIRE(tokens.size() == 3);
    CHECK(tokens[0] == "annalena");
    CHECK(text::join_tokens(tokens) == "annalena baerbock alter");
    CHECK(text::tokenize("").empty());
}

TEST_CASE("percent encoding") {
    CHECK(text::percent_encode("olaf scholz") == "olaf%20scholz");
    CHECK(text::percent_encode("müller") == "m%C3%BCller");
    CHECK(text::percent_encode("abc-_.~") == "abc-_.~");
}
