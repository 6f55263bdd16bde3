#pragma once

#include <cctype>
#include <cmath>
#include <string>
#include <vector>

#include "ckam/errors.hpp"
#include "ckam/grid.hpp"

namespace ckam {

/// Coefficient expressions for config-declared models: sums of terms built
/// from {constants, x^k, sin, cos} in the variables x (and y for T^2),
/// e.g. "cos(x) - 1" or "0.5*x^2 + sin(y)".
class Expr {
public:
    Expr() = default;

    static Expr parse(const std::string& text) {
        Expr e;
        e.source_ = text;
        std::size_t pos = 0;
        double sign = 1.0;
        skip_ws(text, pos);
        if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
            if (text[pos] == '-') sign = -1.0;
            ++pos;
        }
        while (true) {
            skip_ws(text, pos);
            if (pos >= text.size()) {
                if (e.terms_.empty())
                    throw ConfigError("empty expression: '" + text + "'");
                break;
            }
            e.terms_.push_back(parse_term(text, pos, sign));
            skip_ws(text, pos);
            if (pos >= text.size()) break;
            if (text[pos] == '+') sign = 1.0;
            else if (text[pos] == '-') sign = -1.0;
            else throw ConfigError("unexpected character '" + std::string(1, text[pos]) +
                                   "' in expression: '" + text + "'");
            ++pos;
        }
        return e;
    }

    double eval(Vec v) const {
        double s = 0.0;
        for (const Term& t : terms_) {
            double arg = t.axis == 0 ? v[0] : v[1];
            switch (t.kind) {
                case Term::Const: s += t.coef; break;
                case Term::Pow: s += t.coef * std::pow(arg, t.power); break;
                case Term::Sin: s += t.coef * std::sin(arg); break;
                case Term::Cos: s += t.coef * std::cos(arg); break;
            }
        }
        return s;
    }

    /// Analytic partial derivative with respect to axis 0 or 1.
    double deriv(Vec v, int axis) const {
        double s = 0.0;
        for (const Term& t : terms_) {
            if (t.kind == Term::Const || t.axis != axis) continue;
            double arg = t.axis == 0 ? v[0] : v[1];
            switch (t.kind) {
                case Term::Pow:
                    s += t.power == 0 ? 0.0
                                      : t.coef * t.power * std::pow(arg, t.power - 1);
                    break;
                case Term::Sin: s += t.coef * std::cos(arg); break;
                case Term::Cos: s -= t.coef * std::sin(arg); break;
                default: break;
            }
        }
        return s;
    }

    const std::string& source() const { return source_; }

private:
    struct Term {
        enum Kind { Const, Pow, Sin, Cos } kind = Const;
        double coef = 0.0;
        int axis = 0;
        int power = 1;
    };

    static void skip_ws(const std::string& s, std::size_t& pos) {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    static double parse_number(const std::string& s, std::size_t& pos) {
        std::size_t used = 0;
        double v = std::stod(s.substr(pos), &used);
        pos += used;
        return v;
    }

    static Term parse_term(const std::string& s, std::size_t& pos, double sign) {
        Term t;
        t.coef = sign;
        skip_ws(s, pos);
        if (pos < s.size() &&
            (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.')) {
            t.coef *= parse_number(s, pos);
            skip_ws(s, pos);
            if (pos < s.size() && s[pos] == '*') {
                ++pos;
                skip_ws(s, pos);
            } else {
                t.kind = Term::Const;
                return t;
            }
        }
        if (pos >= s.size())
            throw ConfigError("dangling '*' in expression: '" + s + "'");
        if (s.compare(pos, 4, "sin(") == 0 || s.compare(pos, 4, "cos(") == 0) {
            t.kind = s[pos] == 's' ? Term::Sin : Term::Cos;
            pos += 4;
            t.axis = parse_axis(s, pos);
            skip_ws(s, pos);
            if (pos >= s.size() || s[pos] != ')')
                throw ConfigError("missing ')' in expression: '" + s + "'");
            ++pos;
            return t;
        }
        t.kind = Term::Pow;
        t.axis = parse_axis(s, pos);
        skip_ws(s, pos);
        if (pos < s.size() && s[pos] == '^') {
            ++pos;
            skip_ws(s, pos);
            t.power = int(parse_number(s, pos));
            if (t.power < 0) throw ConfigError("negative power in: '" + s + "'");
        }
        return t;
    }

    static int parse_axis(const std::string& s, std::size_t& pos) {
        skip_ws(s, pos);
        if (pos < s.size() && s[pos] == 'x') { ++pos; return 0; }
        if (pos < s.size() && s[pos] == 'y') { ++pos; return 1; }
        throw ConfigError("expected variable x or y in expression: '" + s + "'");
    }

    std::vector<Term> terms_;
    std::string source_;
};

} // namespace ckam
