#include "netsurv/formula.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "netsurv/cohort.hpp"
#include "netsurv/error.hpp"

namespace netsurv {

namespace {

class FormulaParser {
public:
    explicit FormulaParser(std::string_view text) : text_(text) {}

    FormulaSpec parse() {
        FormulaSpec f;
        keyword("Surv");
        expect('(');
        f.time_col = identifier();
        expect(',');
        f.status_col = identifier();
        expect(')');
        expect('~');
        skip_ws();
        if (peek() == '1') {
            ++pos_;
        } else {
            bool seen_strata = false;
            do {
                const auto start = pos_;
                const auto id = identifier();
                if (id == "Strata") {
                    skip_ws();
                    if (peek() != '(') fail(start, "'Strata' is reserved");
                    expect('(');
                    f.strata_cols.push_back(identifier());
                    expect(')');
                    seen_strata = true;
                } else {
                    if (seen_strata) fail(start, "grouping terms must precede Strata(...) terms");
                    f.group_cols.push_back(id);
                }
            } while (accept('+'));
        }
        skip_ws();
        if (pos_ != text_.size()) fail(pos_, "unexpected trailing input");

        std::set<std::string> used;
        for (const auto* list : {&f.group_cols, &f.strata_cols}) {
            for (const auto& c : *list) {
                if (c == f.time_col || c == f.status_col || !used.insert(c).second) {
                    throw Error(ErrorCode::Syntax, "formula uses column '" + c + "' more than once");
                }
            }
        }
        if (f.time_col == f.status_col) {
            throw Error(ErrorCode::Syntax, "formula uses column '" + f.time_col + "' more than once");
        }
        return f;
    }

private:
    [[noreturn]] void fail(std::size_t at, const std::string& what) const {
        throw Error(ErrorCode::Syntax, "formula syntax error at position " + std::to_string(at) + ": " + what);
    }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (peek() != c) return false;
        ++pos_;
        return true;
    }

    void expect(char c) {
        if (!accept(c)) fail(pos_, std::string("expected '") + c + "'");
    }

    std::string identifier() {
        skip_ws();
        const auto start = pos_;
        const auto is_first = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.'; };
        const auto is_rest = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; };
        if (!is_first(peek())) fail(start, "expected a column name");
        while (pos_ < text_.size() && is_rest(text_[pos_])) ++pos_;
        return std::string(text_.substr(start, pos_ - start));
    }

    void keyword(std::string_view word) {
        skip_ws();
        const auto start = pos_;
        if (identifier() != word) fail(start, "expected '" + std::string(word) + "'");
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

} // namespace

FormulaSpec parse_formula(std::string_view text) {
    return FormulaParser(text).parse();
}

std::string render(const FormulaSpec& f) {
    std::string out = "Surv(" + f.time_col + "," + f.status_col + ") ~ ";
    if (f.group_cols.empty() && f.strata_cols.empty()) return out + "1";
    bool first = true;
    for (const auto& g : f.group_cols) {
        out += (first ? "" : " + ") + g;
        first = false;
    }
    for (const auto& s : f.strata_cols) {
        out += (first ? "Strata(" : " + Strata(") + s + ")";
        first = false;
    }
    return out;
}

void validate_formula(const FormulaSpec& formula, const Cohort& cohort) {
    for (const auto& c : formula.group_cols) cohort.column(c);
    for (const auto& c : formula.strata_cols) cohort.column(c);
}

} // namespace netsurv
