#include <cctype>
#include <string>

#include "pmca/error.hpp"
#include "pmca/ratfunc.hpp"

namespace pmca {

namespace {

class ExpressionParser {
  public:
    explicit ExpressionParser(std::string_view text) : text_(text) {}

    RationalFunction parse() {
        RationalFunction f = expression();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return f;
    }

  private:
    RationalFunction expression() {
        RationalFunction f = term();
        while (true) {
            skip_space();
            if (accept('+')) {
                f = f + term();
            } else if (accept('-')) {
                f = f - term();
            } else {
                return f;
            }
        }
    }

    RationalFunction term() {
        RationalFunction f = unary();
        while (true) {
            skip_space();
            if (accept('*')) {
                f = f * unary();
            } else if (accept('/')) {
                f = f / unary();
            } else {
                return f;
            }
        }
    }

    RationalFunction unary() {
        skip_space();
        if (accept('-')) return -unary();
        if (accept('+')) return unary();
        return power();
    }

    RationalFunction power() {
        RationalFunction base = atom();
        skip_space();
        if (!accept('^')) return base;
        skip_space();
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (start == pos_) fail("expected a non-negative integer exponent");
        unsigned long e = std::stoul(std::string(text_.substr(start, pos_ - start)));
        RationalFunction out(1);
        for (unsigned long i = 0; i < e; ++i) out = out * base;
        return out;
    }

    RationalFunction atom() {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            RationalFunction inner = expression();
            skip_space();
            if (!accept(')')) fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                ++pos_;
            }
            return RationalFunction::variable(std::string(text_.substr(start, pos_ - start)));
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    RationalFunction number() {
        std::size_t start = pos_;
        auto digits = [&] {
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        };
        digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            digits();
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t mark = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                digits();
            } else {
                pos_ = mark;
            }
        }
        try {
            return RationalFunction(parse_rational(text_.substr(start, pos_ - start)));
        } catch (const std::invalid_argument& e) {
            fail(e.what());
        }
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& message) const {
        throw ParseError("expression '" + std::string(text_) + "' at column " + std::to_string(pos_ + 1) + ": " +
                         message);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

RationalFunction parse_rational_function(std::string_view text) { return ExpressionParser(text).parse(); }

}  // namespace pmca
