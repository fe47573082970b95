#include "gradcap/parser.hpp"

#include <cctype>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

namespace gradcap {

namespace {

enum class Tok {
    Ident,
    KwClass,
    KwMethod,
    KwMain,
    KwLet,
    KwSpawn,
    KwReceive,
    KwSend,
    KwNew,
    KwUnit,
    KwThis,
    KwMoved,
    KwLent,
    Question,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Dot,
    Colon,
    Arrow,   // ->
    Assign,  // :=
    Eq,      // =
    Eof,
};

struct Token {
    Tok kind;
    std::string text;
    SourceSpan span;
};

const char* tok_name(Tok t) {
    switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::KwClass: return "'class'";
    case Tok::KwMethod: return "'method'";
    case Tok::KwMain: return "'main'";
    case Tok::KwLet: return "'let'";
    case Tok::KwSpawn: return "'spawn'";
    case Tok::KwReceive: return "'receive'";
    case Tok::KwSend: return "'send'";
    case Tok::KwNew: return "'new'";
    case Tok::KwUnit: return "'unit'";
    case Tok::KwThis: return "'this'";
    case Tok::KwMoved: return "'moved'";
    case Tok::KwLent: return "'lent'";
    case Tok::Question: return "'?'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::Comma: return "','";
    case Tok::Semi: return "';'";
    case Tok::Dot: return "'.'";
    case Tok::Colon: return "':'";
    case Tok::Arrow: return "'->'";
    case Tok::Assign: return "':='";
    case Tok::Eq: return "'='";
    case Tok::Eof: return "end of input";
    }
    return "?";
}

std::vector<Token> lex(const std::string& text, const std::string& file) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    const std::size_t n = text.size();

    auto here = [&]() { return SourcePos{line, col}; };
    auto advance = [&](char c) {
        if (c == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
        ++i;
    };
    auto push = [&](Tok k, std::string t, SourcePos start) {
        out.push_back({k, std::move(t), SourceSpan{file, start, here()}});
    };

    while (i < n) {
        char c = text[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance(c);
            continue;
        }
        if (c == '/' && i + 1 < n && text[i + 1] == '/') {
            while (i < n && text[i] != '\n') advance(text[i]);
            continue;
        }
        SourcePos start = here();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string word;
            while (i < n &&
                   (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) {
                word += text[i];
                advance(text[i]);
            }
            Tok k = Tok::Ident;
            if (word == "class") k = Tok::KwClass;
            else if (word == "method") k = Tok::KwMethod;
            else if (word == "main") k = Tok::KwMain;
            else if (word == "let") k = Tok::KwLet;
            else if (word == "spawn") k = Tok::KwSpawn;
            else if (word == "receive") k = Tok::KwReceive;
            else if (word == "send") k = Tok::KwSend;
            else if (word == "new") k = Tok::KwNew;
            else if (word == "unit") k = Tok::KwUnit;
            else if (word == "this") k = Tok::KwThis;
            else if (word == "moved") k = Tok::KwMoved;
            else if (word == "lent" || word == "lend") k = Tok::KwLent; // 'lend' is an accepted alias
            push(k, std::move(word), start);
            continue;
        }
        switch (c) {
        case '?': advance(c); push(Tok::Question, "?", start); continue;
        case '(': advance(c); push(Tok::LParen, "(", start); continue;
        case ')': advance(c); push(Tok::RParen, ")", start); continue;
        case '{': advance(c); push(Tok::LBrace, "{", start); continue;
        case '}': advance(c); push(Tok::RBrace, "}", start); continue;
        case ',': advance(c); push(Tok::Comma, ",", start); continue;
        case ';': advance(c); push(Tok::Semi, ";", start); continue;
        case '.': advance(c); push(Tok::Dot, ".", start); continue;
        case '=': advance(c); push(Tok::Eq, "=", start); continue;
        case ':':
            advance(c);
            if (i < n && text[i] == '=') {
                advance('=');
                push(Tok::Assign, ":=", start);
            } else {
                push(Tok::Colon, ":", start);
            }
            continue;
        case '-':
            advance(c);
            if (i < n && text[i] == '>') {
                advance('>');
                push(Tok::Arrow, "->", start);
                continue;
            }
            throw ParseError(SourceSpan{file, start, here()}, "unexpected character '-'");
        default:
            throw ParseError(SourceSpan{file, start, {line, col + 1}},
                             std::string("unexpected character '") + c + "'");
        }
    }
    out.push_back({Tok::Eof, "", SourceSpan{file, here(), here()}});
    return out;
}

class Parser {
  public:
    Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {
        // Pick a hidden-binder prefix no identifier in the input starts
        // with, so sequence sugar can never capture a user variable.
        seq_prefix_ = "_s";
        bool clash = true;
        while (clash) {
            clash = false;
            for (const auto& t : toks_) {
                if (t.kind == Tok::Ident && t.text.starts_with(seq_prefix_)) {
                    seq_prefix_ += 's';
                    clash = true;
                    break;
                }
            }
        }
    }

    Program parse() {
        Program p;
        while (at(Tok::KwClass)) {
            ClassDecl cls = parse_class();
            if (p.classes.contains(cls.name))
                throw ParseError(cls.span, "duplicate class " + cls.name);
            p.classes.emplace(cls.name, std::move(cls));
        }
        expect(Tok::KwMain);
        expect(Tok::LBrace);
        p.main = parse_stmt();
        expect(Tok::RBrace);
        if (!at(Tok::Eof))
            throw ParseError(peek().span, "unexpected input after main block",
                             {tok_name(Tok::Eof)});
        return p;
    }

  private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::string seq_prefix_;
    std::uint64_t seq_counter_ = 0;

    const Token& peek(std::size_t ahead = 0) const {
        std::size_t i = pos_ + ahead;
        return i < toks_.size() ? toks_[i] : toks_.back();
    }
    bool at(Tok k) const { return peek().kind == k; }
    Token take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
    Token expect(Tok k) {
        if (!at(k))
            throw ParseError(peek().span,
                             "expected " + std::string(tok_name(k)) + ", found " +
                                 (peek().kind == Tok::Eof ? "end of input" : "'" + peek().text + "'"),
                             {tok_name(k)});
        return take();
    }

    static SourceSpan join(const SourceSpan& a, const SourceSpan& b) {
        return SourceSpan{a.file, a.start, b.end};
    }

    std::optional<Capability> try_cap() {
        if (at(Tok::Question)) {
            take();
            return Capability::Dyn;
        }
        if (at(Tok::KwMoved)) {
            take();
            return Capability::Moved;
        }
        if (at(Tok::KwLent)) {
            take();
            return Capability::Lent;
        }
        return std::nullopt;
    }
    Capability expect_cap() {
        if (auto k = try_cap()) return *k;
        throw ParseError(peek().span, "expected a capability",
                         {tok_name(Tok::Question), tok_name(Tok::KwMoved), tok_name(Tok::KwLent)});
    }

    ClassDecl parse_class() {
        Token kw = expect(Tok::KwClass);
        ClassDecl cls;
        cls.name = expect(Tok::Ident).text;
        expect(Tok::LParen);
        if (!at(Tok::RParen)) {
            while (true) {
                Capability cap = try_cap().value_or(Capability::Dyn);
                cls.fields.emplace_back(expect(Tok::Ident).text, cap);
                if (!at(Tok::Comma)) break;
                take();
            }
        }
        expect(Tok::RParen);
        expect(Tok::LBrace);
        while (!at(Tok::RBrace)) cls.methods.push_back(parse_method());
        Token close = expect(Tok::RBrace);
        cls.span = join(kw.span, close.span);
        return cls;
    }

    MethodDecl parse_method() {
        MethodDecl m;
        SourceSpan start = peek().span;
        m.recv_cap = try_cap().value_or(Capability::Dyn);
        expect(Tok::KwMethod);
        m.name = expect(Tok::Ident).text;
        expect(Tok::LParen);
        if (!at(Tok::RParen)) {
            while (true) {
                std::string pname = expect(Tok::Ident).text;
                Capability cap = Capability::Dyn;
                if (at(Tok::Colon)) {
                    take();
                    cap = expect_cap();
                }
                m.params.emplace_back(std::move(pname), cap);
                if (!at(Tok::Comma)) break;
                take();
            }
        }
        expect(Tok::RParen);
        if (at(Tok::Arrow)) {
            take();
            m.ret_cap = expect_cap();
        }
        expect(Tok::LBrace);
        m.body = parse_stmt();
        Token close = expect(Tok::RBrace);
        m.span = join(start, close.span);
        return m;
    }

    // Statement level: let bindings and `e1; e2` sequencing sugar.
    ExprPtr parse_stmt() {
        if (at(Tok::KwLet)) {
            Token kw = take();
            Capability cap = try_cap().value_or(Capability::Dyn);
            std::string var = expect(Tok::Ident).text;
            expect(Tok::Eq);
            ExprPtr rhs = parse_simple();
            expect(Tok::Semi);
            ExprPtr body = parse_stmt();
            SourceSpan span = join(kw.span, body->span);
            return make_expr(LetExpr{cap, std::move(var), std::move(rhs), std::move(body)}, span);
        }
        ExprPtr first = parse_simple();
        if (at(Tok::Semi)) {
            take();
            ExprPtr rest = parse_stmt();
            SourceSpan span = join(first->span, rest->span);
            std::string hidden = seq_prefix_ + std::to_string(seq_counter_++);
            return make_expr(LetExpr{Capability::Dyn, std::move(hidden), std::move(first),
                                     std::move(rest)},
                             span);
        }
        return first;
    }

    // Simple level: postfix call/access/assignment chains over a primary.
    ExprPtr parse_simple() {
        ExprPtr e = parse_primary();
        while (at(Tok::Dot)) {
            take();
            Token name = expect(Tok::Ident);
            if (at(Tok::LParen)) {
                std::vector<ExprPtr> args = parse_args();
                SourceSpan span = join(e->span, toks_[pos_ - 1].span);
                e = make_expr(CallExpr{std::move(e), name.text, std::move(args)}, span);
                continue;
            }
            if (at(Tok::Assign)) {
                take();
                ExprPtr rhs = parse_simple();
                SourceSpan span = join(e->span, rhs->span);
                return make_expr(FieldSetExpr{std::move(e), name.text, std::move(rhs)}, span);
            }
            SourceSpan span = join(e->span, name.span);
            e = make_expr(FieldGetExpr{std::move(e), name.text}, span);
        }
        return e;
    }

    std::vector<ExprPtr> parse_args() {
        expect(Tok::LParen);
        std::vector<ExprPtr> args;
        if (!at(Tok::RParen)) {
            while (true) {
                args.push_back(parse_stmt());
                if (!at(Tok::Comma)) break;
                take();
            }
        }
        expect(Tok::RParen);
        return args;
    }

    ExprPtr parse_primary() {
        const Token& t = peek();
        switch (t.kind) {
        case Tok::KwUnit: {
            Token tok = take();
            return make_value_expr(Value::unit(), tok.span);
        }
        case Tok::KwThis: {
            Token tok = take();
            return make_expr(ThisExpr{}, tok.span);
        }
        case Tok::KwReceive: {
            Token tok = take();
            return make_expr(ReceiveExpr{}, tok.span);
        }
        case Tok::Ident: {
            Token tok = take();
            return make_expr(VarExpr{tok.text}, tok.span);
        }
        case Tok::KwNew: {
            Token kw = take();
            std::string cls = expect(Tok::Ident).text;
            std::vector<ExprPtr> args = parse_args();
            SourceSpan span = join(kw.span, toks_[pos_ - 1].span);
            return make_expr(NewExpr{std::move(cls), std::move(args)}, span);
        }
        case Tok::KwSpawn: {
            Token kw = take();
            expect(Tok::LBrace);
            ExprPtr body = parse_stmt();
            Token close = expect(Tok::RBrace);
            return make_expr(SpawnExpr{std::move(body)}, join(kw.span, close.span));
        }
        case Tok::KwSend: {
            Token kw = take();
            expect(Tok::LParen);
            ExprPtr target = parse_stmt();
            expect(Tok::Comma);
            ExprPtr payload = parse_stmt();
            Token close = expect(Tok::RParen);
            return make_expr(SendExpr{std::move(target), std::move(payload)},
                             join(kw.span, close.span));
        }
        case Tok::LParen: {
            take();
            ExprPtr inner = parse_stmt();
            expect(Tok::RParen);
            return inner;
        }
        default:
            throw ParseError(t.span,
                             "expected an expression, found " +
                                 (t.kind == Tok::Eof ? "end of input" : "'" + t.text + "'"),
                             {"'let'", "'spawn'", "'receive'", "'send'", "'new'", "'unit'",
                              "'this'", "identifier", "'('"});
        }
    }
};

} // namespace

Program parse_program(const std::string& text, const std::string& file) {
    return Parser(lex(text, file)).parse();
}

Program parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(SourceSpan{path, {}, {}}, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_program(ss.str(), path);
}

} // namespace gradcap
