#include "splitpipe/annotation.hpp"

#include <cctype>
#include <set>
#include <sstream>

namespace splitpipe {

namespace {

struct Cursor {
    std::string_view text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    bool done() {
        skip_ws();
        return pos >= text.size();
    }
    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }
    bool accept(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    void expect(char c, const char* what) {
        if (!accept(c))
            throw ParseError(pos, std::string("expected '") + c + "' " + what);
    }
    bool accept_word(std::string_view word) {
        skip_ws();
        if (text.substr(pos, word.size()) != word) return false;
        std::size_t after = pos + word.size();
        if (after < text.size()) {
            char c = text[after];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') return false;
        }
        pos = after;
        return true;
    }
    std::string ident(const char* what) {
        skip_ws();
        std::size_t start = pos;
        if (pos < text.size() && std::isalpha(static_cast<unsigned char>(text[pos]))) {
            ++pos;
            while (pos < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
                ++pos;
        }
        if (pos == start)
            throw ParseError(pos, std::string("expected ") + what);
        return std::string(text.substr(start, pos - start));
    }
};

SplitTypeExpr parse_expr(Cursor& cur) {
    if (cur.accept('_')) return SplitTypeExpr{SplitTypeExpr::Kind::missing, "", {}};
    if (cur.accept_word("unknown")) return SplitTypeExpr{SplitTypeExpr::Kind::unknown, "", {}};
    std::string name = cur.ident("split-type expression");
    if (!cur.accept('('))
        return SplitTypeExpr{SplitTypeExpr::Kind::generic, std::move(name), {}};
    SplitTypeExpr expr{SplitTypeExpr::Kind::constructor, std::move(name), {}};
    if (!cur.accept(')')) {
        do {
            expr.args.push_back(cur.ident("constructor argument"));
        } while (cur.accept(','));
        cur.expect(')', "to close constructor arguments");
    }
    return expr;
}

void print_expr(std::ostringstream& out, const SplitTypeExpr& expr) {
    switch (expr.kind) {
    case SplitTypeExpr::Kind::missing:
        out << "_";
        break;
    case SplitTypeExpr::Kind::unknown:
        out << "unknown";
        break;
    case SplitTypeExpr::Kind::generic:
        out << expr.name;
        break;
    case SplitTypeExpr::Kind::constructor:
        out << expr.name << "(";
        for (std::size_t i = 0; i < expr.args.size(); ++i) {
            if (i) out << ", ";
            out << expr.args[i];
        }
        out << ")";
        break;
    }
}

}  // namespace

int SplitAnnotation::index_of(std::string_view param_name) const {
    for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i].name == param_name) return static_cast<int>(i);
    return -1;
}

std::string SplitAnnotation::to_string() const {
    std::ostringstream out;
    out << "@splittable(";
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (i) out << ", ";
        if (params[i].is_mut) out << "mut ";
        out << params[i].name << ": ";
        print_expr(out, params[i].expr);
    }
    out << ")";
    if (return_expr) {
        out << " -> ";
        print_expr(out, *return_expr);
    }
    return out.str();
}

SplitAnnotation parse_annotation(std::string_view text) {
    Cursor cur{text};
    cur.skip_ws();
    if (!cur.accept('@') || !cur.accept_word("splittable"))
        throw ParseError(cur.pos, "annotation must start with '@splittable'");
    cur.expect('(', "after '@splittable'");

    SplitAnnotation sa;
    std::set<std::string> seen;
    if (!cur.accept(')')) {
        do {
            AnnotationParam param;
            param.is_mut = cur.accept_word("mut");
            cur.skip_ws();
            std::size_t name_pos = cur.pos;
            param.name = cur.ident("parameter name");
            if (!seen.insert(param.name).second)
                throw ParseError(name_pos, "duplicate parameter name '" + param.name + "'");
            cur.expect(':', "after parameter name");
            param.expr = parse_expr(cur);
            sa.params.push_back(std::move(param));
        } while (cur.accept(','));
        cur.expect(')', "to close the parameter list");
    }
    if (cur.accept('-')) {
        cur.expect('>', "in '->'");
        sa.return_expr = parse_expr(cur);
    }
    if (!cur.done())
        throw ParseError(cur.pos, "trailing input after annotation");
    auto check_refs = [&](const SplitTypeExpr& expr) {
        if (expr.kind != SplitTypeExpr::Kind::constructor) return;
        for (const auto& arg : expr.args) {
            if (sa.index_of(arg) < 0)
                raise(Errc::unknown_reference,
                      "constructor argument '" + arg + "' names no declared parameter");
        }
    };
    for (const auto& param : sa.params) check_refs(param.expr);
    if (sa.return_expr) check_refs(*sa.return_expr);
    return sa;
}

std::vector<std::string> validate_annotation(const SplitAnnotation& sa,
                                             const FunctionSignature& sig,
                                             const SplitKindRegistry& registry) {
    std::vector<std::string> violations;
    if (sa.params.size() > sig.arg_types.size()) {
        violations.push_back("annotation names " + std::to_string(sa.params.size()) +
                             " parameters but the function takes " +
                             std::to_string(sig.arg_types.size()));
        return violations;
    }

    auto check_expr = [&](const SplitTypeExpr& expr, const std::string& data_type,
                          const std::string& where) {
        switch (expr.kind) {
        case SplitTypeExpr::Kind::constructor: {
            const SplitKind* kind = registry.find(expr.name);
            if (!kind) {
                violations.push_back(where + ": split kind '" + expr.name + "' is not registered");
            } else if (kind->concrete_type != data_type) {
                violations.push_back(where + ": split kind '" + expr.name + "' splits '" +
                                     kind->concrete_type + "' but the value has type '" +
                                     data_type + "'");
            }
            break;
        }
        case SplitTypeExpr::Kind::generic:
            if (registry.contains(expr.name))
                violations.push_back(where + ": '" + expr.name +
                                     "' names a registered split kind; write '" + expr.name +
                                     "(...)' for a constructor");
            break;
        default:
            break;
        }
    };

    for (std::size_t i = 0; i < sa.params.size(); ++i) {
        const auto& param = sa.params[i];
        std::string where = "parameter '" + param.name + "'";
        if (param.is_mut && !sig.writable[i])
            violations.push_back(where + ": marked mut but the function does not write it");
        check_expr(param.expr, sig.arg_types[i], where);
    }
    if (sa.return_expr) {
        if (sig.return_type.empty())
            violations.push_back("return: annotation has a return split type but the function "
                                 "returns nothing");
        else
            check_expr(*sa.return_expr, sig.return_type, "return");
    }
    return violations;
}

SplitAnnotation normalize_annotation(SplitAnnotation sa, const FunctionSignature& sig) {
    while (sa.params.size() < sig.arg_types.size()) {
        AnnotationParam pad;
        pad.name = "_arg" + std::to_string(sa.params.size());
        pad.expr = SplitTypeExpr::missing_expr();
        sa.params.push_back(std::move(pad));
    }
    return sa;
}

}  // namespace splitpipe
