#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace groklab {

// Grid point (i, j) with 0 <= i, j < p.
struct Pair {
    int i = 0;
    int j = 0;
    friend auto operator<=>(const Pair&, const Pair&) = default;
};

// One monomial coeff * i^exp_i * j^exp_j of the label polynomial.
struct Term {
    long long coeff = 0;
    int exp_i = 0;
    int exp_j = 0;
    friend bool operator==(const Term&, const Term&) = default;
};

// Prime modulus p plus polynomial f(i,j); labels are f(i,j) mod p.
// operand_offset shifts the second operand's token range (the label
// function is unaffected; only the vocabulary layout changes).
struct TaskSpec {
    TaskSpec(int p, std::vector<Term> terms, int operand_offset = 0);

    int p = 0;
    std::vector<Term> terms;  // coefficients reduced into [0, p)
    int operand_offset = 0;

    int vocab_size() const { return p + operand_offset + 1; }
    int cls_token() const { return vocab_size() - 1; }
};

bool is_prime(int n);

// Parses polynomials like "i+j", "i-j", "i*j", "i^2+i*j+j^2", "i^3+ij+j^3".
// 'x'/'y' are accepted as aliases for 'i'/'j'.
std::vector<Term> parse_polynomial(const std::string& text);
std::string polynomial_to_string(const std::vector<Term>& terms);

// f(i,j) mod p reduced into [0, p).
int eval_f_mod(const TaskSpec& task, Pair pair);

// Token triple (i_tok, j_tok, cls_tok) for one grid point.
std::array<int, 3> tokenize(const TaskSpec& task, Pair pair);

// Partition of the p x p grid by residue class.
struct ResidueClasses {
    std::vector<std::vector<Pair>> classes;  // indexed by residue, row-major inside
    std::vector<long long> sizes;
    std::vector<int> labels;  // p*p row-major lookup: labels[i*p + j]

    int class_of(Pair pr, int p) const { return labels[static_cast<size_t>(pr.i) * p + pr.j]; }
};

ResidueClasses class_partition(const TaskSpec& task);

}  // namespace groklab
