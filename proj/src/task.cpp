#include "groklab/task.hpp"

#include <cctype>
#include <sstream>
#include <stdexcept>

namespace groklab {

bool is_prime(int n) {
    if (n < 2) return false;
    if (n % 2 == 0) return n == 2;
    for (int d = 3; static_cast<long long>(d) * d <= n; d += 2) {
        if (n % d == 0) return false;
    }
    return true;
}

TaskSpec::TaskSpec(int p_, std::vector<Term> terms_, int operand_offset_)
    : p(p_), terms(std::move(terms_)), operand_offset(operand_offset_) {
    if (p < 3 || p > 65521 || !is_prime(p))
        throw std::invalid_argument("TaskSpec: p must be a prime in [3, 65521]");
    if (terms.empty())
        throw std::invalid_argument("TaskSpec: polynomial needs at least one term");
    if (operand_offset < 0)
        throw std::invalid_argument("TaskSpec: operand_offset must be >= 0");
    for (auto& t : terms) {
        if (t.exp_i < 0 || t.exp_j < 0)
            throw std::invalid_argument("TaskSpec: exponents must be >= 0");
        t.coeff %= p;
        if (t.coeff < 0) t.coeff += p;
    }
}

namespace {

long long pow_mod(long long base, int exp, long long p) {
    base %= p;
    if (base < 0) base += p;
    long long result = 1;
    while (exp > 0) {
        if (exp & 1) result = result * base % p;
        base = base * base % p;
        exp >>= 1;
    }
    return result;
}

}  // namespace

int eval_f_mod(const TaskSpec& task, Pair pair) {
    if (pair.i < 0 || pair.i >= task.p || pair.j < 0 || pair.j >= task.p)
        throw std::invalid_argument("eval_f_mod: pair outside [0,p)^2");
    const long long p = task.p;
    long long acc = 0;
    for (const auto& t : task.terms) {
        long long term = t.coeff % p;
        term = term * pow_mod(pair.i, t.exp_i, p) % p;
        term = term * pow_mod(pair.j, t.exp_j, p) % p;
        acc = (acc + term) % p;
    }
    return static_cast<int>(acc);
}

std::array<int, 3> tokenize(const TaskSpec& task, Pair pair) {
    if (pair.i < 0 || pair.i >= task.p || pair.j < 0 || pair.j >= task.p)
        throw std::invalid_argument("tokenize: pair outside [0,p)^2");
    return {pair.i, task.operand_offset + pair.j, task.cls_token()};
}

ResidueClasses class_partition(const TaskSpec& task) {
    ResidueClasses rc;
    rc.classes.resize(task.p);
    rc.sizes.assign(task.p, 0);
    rc.labels.resize(static_cast<size_t>(task.p) * task.p);
    for (int i = 0; i < task.p; ++i) {
        for (int j = 0; j < task.p; ++j) {
            const int c = eval_f_mod(task, {i, j});
            rc.classes[c].push_back({i, j});
            rc.sizes[c] += 1;
            rc.labels[static_cast<size_t>(i) * task.p + j] = c;
        }
    }
    return rc;
}

namespace {

struct PolyParser {
    const std::string& text;
    size_t pos = 0;

    explicit PolyParser(const std::string& t) : text(t) {}

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    long long parse_int() {
        skip_ws();
        size_t start = pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        if (pos == start) throw std::invalid_argument("parse_polynomial: expected integer at position " + std::to_string(start));
        return std::stoll(text.substr(start, pos - start));
    }

    // term := [int] factor*   where factor := ('i'|'j'|'x'|'y') ['^' int]
    Term parse_term(int sign) {
        Term t{sign, 0, 0};
        skip_ws();
        const size_t begin = pos;
        bool saw_coeff = false;
        if (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            t.coeff = sign * parse_int();
            saw_coeff = true;
        }
        for (;;) {
            skip_ws();
            eat('*');
            skip_ws();
            if (pos >= text.size()) break;
            char c = text[pos];
            int* exp = nullptr;
            if (c == 'i' || c == 'x') exp = &t.exp_i;
            else if (c == 'j' || c == 'y') exp = &t.exp_j;
            else break;
            ++pos;
            int e = 1;
            if (eat('^')) e = static_cast<int>(parse_int());
            *exp += e;
        }
        if (!saw_coeff && t.exp_i == 0 && t.exp_j == 0)
            throw std::invalid_argument("parse_polynomial: expected term at position " +
                                        std::to_string(begin));
        return t;
    }

    std::vector<Term> parse() {
        std::vector<Term> terms;
        int sign = 1;
        if (eat('-')) sign = -1;
        else eat('+');
        terms.push_back(parse_term(sign));
        for (;;) {
            skip_ws();
            if (pos >= text.size()) break;
            if (eat('+')) sign = 1;
            else if (eat('-')) sign = -1;
            else throw std::invalid_argument("parse_polynomial: unexpected character '" + std::string(1, text[pos]) + "'");
            terms.push_back(parse_term(sign));
        }
        return terms;
    }
};

}  // namespace

std::vector<Term> parse_polynomial(const std::string& text) {
    PolyParser parser(text);
    auto terms = parser.parse();
    if (terms.empty()) throw std::invalid_argument("parse_polynomial: empty polynomial");
    return terms;
}

std::string polynomial_to_string(const std::vector<Term>& terms) {
    std::ostringstream out;
    bool first = true;
    for (const auto& t : terms) {
        const bool has_var = t.exp_i > 0 || t.exp_j > 0;
        const long long mag = t.coeff < 0 ? -t.coeff : t.coeff;
        if (t.coeff < 0) out << "-";
        else if (!first) out << "+";
        first = false;
        if (mag != 1 || !has_var) out << mag;
        if (mag != 1 && has_var) out << "*";
        if (t.exp_i == 1) out << "i";
        else if (t.exp_i > 1) out << "i^" << t.exp_i;
        if (t.exp_i > 0 && t.exp_j > 0) out << "*";
        if (t.exp_j == 1) out << "j";
        else if (t.exp_j > 1) out << "j^" << t.exp_j;
    }
    return out.str();
}

}  // namespace groklab
