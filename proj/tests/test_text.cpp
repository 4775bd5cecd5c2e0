#include <catch2/catch_amalgamated.hpp>

#include "semcache/text.hpp"

using namespace semcache;

TEST_CASE("trim strips ascii whitespace from both ends", "[text]") {
    CHECK(trim("  hello  ") == "hello");
    CHECK(trim("\t\n x \r\n") == "x");
    CHECK(trim("nospace") == "nospace");
    CHECK(trim("   ") == "");
    CHECK(trim("") == "");
    CHECK(trim("a  b") == "a  b");
}

TEST_CASE("to_lower maps ascii only", "[text]") {
    CHECK(to_lower("Hello World") == "hello world");
    CHECK(to_lower("AT-1!") == "at-1!");
    CHECK(to_lower("") == "");
}

TEST_CASE("normalize_question pinned examples", "[text]") {
    CHECK(normalize_question("HELLO!!") == "hello!");
    CHECK(normalize_question("What is AT1?") == "what is at1");
    CHECK(normalize_question("  What   is\tAT1? ") == "what is at1");
    CHECK(normalize_question("done.") == "done");
    CHECK(normalize_question("sure !") == "sure");
    CHECK(normalize_question("") == "");
    CHECK(normalize_question("???") == "??");
}

TEST_CASE("normalize_question strips exactly one terminal mark", "[text]") {
    CHECK(normalize_question("why?!") == "why?");
    CHECK(normalize_question(normalize_question("why?!")) == "why");
}

TEST_CASE("normalize_question is idempotent on single-mark questions", "[text]") {
    for (const std::string& q : {"what is at1", "How Big Is It?", "list the parts.",
                                 "plain words no mark", "spaced   out   q?"}) {
        std::string once = normalize_question(q);
        CHECK(normalize_question(once) == once);
    }
}

TEST_CASE("tokenize lowercases and splits on non-alphanumeric runs", "[text]") {
    CHECK(tokenize("What is AT-1?") == std::vector<std::string>{"what", "is", "at", "1"});
    CHECK(tokenize("alpha  beta") == std::vector<std::string>{"alpha", "beta"});
    CHECK(tokenize("a,b;;c") == std::vector<std::string>{"a", "b", "c"});
    CHECK(tokenize("...") == std::vector<std::string>{});
    CHECK(tokenize("") == std::vector<std::string>{});
    CHECK(tokenize("x9y") == std::vector<std::string>{"x9y"});
}
