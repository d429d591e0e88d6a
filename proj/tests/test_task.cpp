#include <algorithm>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "groklab/task.hpp"

using namespace groklab;

TEST_CASE("is_prime on small inputs") {
    CHECK(is_prime(2));
    CHECK(is_prime(3));
    CHECK(is_prime(5));
    CHECK(is_prime(47));
    CHECK(is_prime(97));
    CHECK(is_prime(65521));
    CHECK_FALSE(is_prime(1));
    CHECK_FALSE(is_prime(0));
    CHECK_FALSE(is_prime(4));
    CHECK_FALSE(is_prime(49));
    CHECK_FALSE(is_prime(91));  // 7 * 13
}

TEST_CASE("task spec validation") {
    CHECK_NOTHROW(TaskSpec(5, parse_polynomial("i+j")));
    CHECK_THROWS_AS(TaskSpec(4, parse_polynomial("i+j")), std::invalid_argument);
    CHECK_THROWS_AS(TaskSpec(1, parse_polynomial("i+j")), std::invalid_argument);
    CHECK_THROWS_AS(TaskSpec(5, std::vector<Term>{}), std::invalid_argument);
    CHECK_THROWS_AS(TaskSpec(5, parse_polynomial("i+j"), -1), std::invalid_argument);
}

TEST_CASE("polynomial parsing against direct evaluation") {
    // Evaluate each parsed polynomial over a small grid and compare with the
    // hand-written expression.
    const int p = 11;
    auto check_poly = [&](const std::string& text, auto f) {
        const TaskSpec task(p, parse_polynomial(text));
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) {
                const long long want = ((f(i, j) % p) + p) % p;
                CHECK(eval_f_mod(task, {i, j}) == static_cast<int>(want));
            }
    };
    check_poly("i+j", [](long long i, long long j) { return i + j; });
    check_poly("i-j", [](long long i, long long j) { return i - j; });
    check_poly("i*j", [](long long i, long long j) { return i * j; });
    check_poly("2i+3j", [](long long i, long long j) { return 2 * i + 3 * j; });
    check_poly("i^2+i*j+j^2", [](long long i, long long j) { return i * i + i * j + j * j; });
    check_poly("i^3+ij+j^3",
               [](long long i, long long j) { return i * i * i + i * j + j * j * j; });
    check_poly("x+y", [](long long i, long long j) { return i + j; });  // aliases
}

TEST_CASE("polynomial print and reparse round-trip") {
    for (const std::string text : {"i+j", "i-j", "i^2+i*j+j^2", "2i+3j", "i^3+ij+j^3"}) {
        const auto terms = parse_polynomial(text);
        const auto reparsed = parse_polynomial(polynomial_to_string(terms));
        const TaskSpec a(13, terms), b(13, reparsed);
        for (int i = 0; i < 13; ++i)
            for (int j = 0; j < 13; ++j) CHECK(eval_f_mod(a, {i, j}) == eval_f_mod(b, {i, j}));
    }
}

TEST_CASE("frozen residue values") {
    const TaskSpec add(97, parse_polynomial("i+j"));
    CHECK(eval_f_mod(add, {95, 4}) == 2);  // 99 mod 97

    const TaskSpec sub(97, parse_polynomial("i-j"));
    CHECK(eval_f_mod(sub, {4, 95}) == 6);  // -91 mod 97

    const TaskSpec quad(97, parse_polynomial("i^2+i*j+j^2"));
    CHECK(eval_f_mod(quad, {3, 5}) == 49);  // 9 + 15 + 25
}

TEST_CASE("tokenize layout") {
    const TaskSpec plain(97, parse_polynomial("i+j"));
    CHECK(plain.vocab_size() == 98);
    CHECK(tokenize(plain, {3, 5}) == std::array<int, 3>{3, 5, 97});

    const TaskSpec shifted(97, parse_polynomial("i+j"), 85);
    CHECK(shifted.vocab_size() == 183);
    CHECK(tokenize(shifted, {0, 0}) == std::array<int, 3>{0, 85, 182});

    const TaskSpec tiny(5, parse_polynomial("i+j"));
    CHECK(tokenize(tiny, {4, 4}) == std::array<int, 3>{4, 4, 5});
}

TEST_CASE("class partition for addition") {
    const TaskSpec task(97, parse_polynomial("i+j"));
    const ResidueClasses classes = class_partition(task);
    REQUIRE(classes.classes.size() == 97);
    for (const auto size : classes.sizes) CHECK(size == 97);  // lines i+j=c

    const TaskSpec small(5, parse_polynomial("i+j"));
    const ResidueClasses small_classes = class_partition(small);
    const std::vector<Pair> expect{{0, 0}, {1, 4}, {2, 3}, {3, 2}, {4, 1}};
    CHECK(small_classes.classes[0] == expect);
}

TEST_CASE("class partition matches direct enumeration for a quadratic") {
    const TaskSpec task(7, parse_polynomial("i^2+i*j+j^2"));
    const ResidueClasses classes = class_partition(task);
    std::vector<long long> sizes(7, 0);
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j) {
            const long long v = (i * i + i * j + j * j) % 7;
            ++sizes[v];
            CHECK(classes.class_of({i, j}, 7) == static_cast<int>(v));
        }
    CHECK(classes.sizes == sizes);
    long long total = 0;
    for (const auto s : classes.sizes) total += s;
    CHECK(total == 49);
}

TEST_CASE("addition classes are translation invariant") {
    const int p = 13;
    const TaskSpec task(p, parse_polynomial("i+j"));
    const ResidueClasses classes = class_partition(task);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
            const Pair shifted{(i + 1) % p, (j - 1 + p) % p};
            CHECK(classes.class_of({i, j}, p) == classes.class_of(shifted, p));
        }
}

TEST_CASE("partition property holds exhaustively") {
    for (const std::string text : {"i+j", "i*j", "i^2+i*j+j^2"}) {
        const TaskSpec task(11, parse_polynomial(text));
        const ResidueClasses classes = class_partition(task);
        long long total = 0;
        for (const auto s : classes.sizes) total += s;
        CHECK(total == 121);
        for (int c = 0; c < 11; ++c)
            for (const Pair pr : classes.classes[c]) CHECK(eval_f_mod(task, pr) == c);
    }
}

TEST_CASE("parser rejects malformed input") {
    CHECK_THROWS_AS(parse_polynomial(""), std::invalid_argument);
    CHECK_THROWS_AS(parse_polynomial("i+"), std::invalid_argument);
    CHECK_THROWS_AS(parse_polynomial("k+j"), std::invalid_argument);
    CHECK_THROWS_AS(parse_polynomial("i^"), std::invalid_argument);
    CHECK_THROWS_AS(parse_polynomial("i**j"), std::invalid_argument);
}
