#pragma once

// Line-oriented textual form of the IR (`.vir` files).
//
//   IRSB @ 0x401000 {
//      t0:Ity_I64 t1:Ity_I64
//      00 | ------ IMark(0x401000, 4, 0) ------
//      01 | t0 = GET:I64(offset=16)
//      02 | t1 = Add64(t0,0x0000000000000008)
//      03 | PUT(offset=24) = t1
//      NEXT: PUT(offset=184) = 0x0000000000401004; Ijk_Boring
//   }
//
// Statement indices are informative; the parser renumbers. `#` starts a
// comment. Constants print zero-padded to their type width; I1 constants
// print as a bare `0` or `1`.

#include <cctype>
#include <charconv>
#include <cstdio>
#include <sstream>
#include <string>
#include <string_view>

#include "lift/ir.hpp"

namespace lift {

class ParseError : public Error {
public:
    ParseError(int line, int column, std::string message, std::string snippet)
        : Error(format(line, column, message, snippet)),
          line(line), column(column), message(std::move(message)), snippet(std::move(snippet)) {}

    int line;
    int column;
    std::string message;
    std::string snippet;

private:
    static std::string format(int line, int col, const std::string& msg, const std::string& snip) {
        return std::to_string(line) + ":" + std::to_string(col) + ": " + msg + "\n  " + snip;
    }
};

class DuplicateAddressError : public ParseError {
public:
    using ParseError::ParseError;
};

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

inline std::string hex_addr(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string format_const(std::uint64_t v, Ty t) {
    if (t == Ty::I1) return (v & 1) ? "1" : "0";
    char buf[24];
    std::snprintf(buf, sizeof buf, "0x%0*llx", static_cast<int>(bit_width(t) / 4),
                  static_cast<unsigned long long>(v & type_mask(t)));
    return buf;
}

inline void print_expr(std::string& out, const ExprPtr& e);

inline std::string print_expr(const ExprPtr& e) {
    std::string s;
    print_expr(s, e);
    return s;
}

inline void print_expr(std::string& out, const ExprPtr& e) {
    if (!e) {
        out += "<null>";
        return;
    }
    std::visit(
        [&](const auto& n) {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, Const>) {
                out += format_const(n.value, n.type);
            } else if constexpr (std::is_same_v<N, RdTmp>) {
                out += "t" + std::to_string(n.tmp);
            } else if constexpr (std::is_same_v<N, Get>) {
                out += "GET:";
                out += type_name(n.type);
                out += "(offset=" + std::to_string(n.offset) + ")";
            } else if constexpr (std::is_same_v<N, Load>) {
                out += "LDle:";
                out += type_name(n.type);
                out += "(";
                print_expr(out, n.addr);
                out += ")";
            } else if constexpr (std::is_same_v<N, Binop>) {
                out += op_name(n.op) + "(";
                print_expr(out, n.lhs);
                out += ",";
                print_expr(out, n.rhs);
                out += ")";
            } else if constexpr (std::is_same_v<N, Unop>) {
                out += op_name(n.op) + "(";
                print_expr(out, n.arg);
                out += ")";
            } else if constexpr (std::is_same_v<N, Ite>) {
                out += "ITE(";
                print_expr(out, n.cond);
                out += ",";
                print_expr(out, n.ift);
                out += ",";
                print_expr(out, n.iff);
                out += ")";
            } else if constexpr (std::is_same_v<N, Opaque>) {
                out += n.name + "(";
                for (std::size_t i = 0; i < n.args.size(); ++i) {
                    if (i) out += ",";
                    print_expr(out, n.args[i]);
                }
                out += ")";
            }
        },
        e->node);
}

/// Statement body without the index prefix.
inline std::string print_statement(const Statement& s) {
    return std::visit(
        [](const auto& n) -> std::string {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, IMark>) {
                return "------ IMark(" + hex_addr(n.addr) + ", " + std::to_string(n.len) + ", " +
                       std::to_string(n.delta) + ") ------";
            } else if constexpr (std::is_same_v<N, WrTmp>) {
                return "t" + std::to_string(n.tmp) + " = " + print_expr(n.rhs);
            } else if constexpr (std::is_same_v<N, Put>) {
                return "PUT(offset=" + std::to_string(n.offset) + ") = " + print_expr(n.rhs);
            } else if constexpr (std::is_same_v<N, Store>) {
                return "STOREle(" + print_expr(n.addr) + ") = " + print_expr(n.data);
            } else if constexpr (std::is_same_v<N, Exit>) {
                return "if (" + print_expr(n.guard) + ") { PUT(offset=" + std::to_string(n.pc_offset) +
                       ") = " + hex_addr(n.target) + "; Ijk_" + std::string(jumpkind_name(n.jumpkind)) + " }";
            } else {
                return "NoOp";
            }
        },
        s);
}

inline std::string format_index(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02zu", i);
    return buf;
}

/// Canonical form. Output re-parses to a structurally identical block.
inline std::string print_irsb(const IrSb& b) {
    std::string out = "IRSB @ " + hex_addr(b.addr) + " {\n";
    std::size_t col = 0;
    for (const auto& [t, ty] : b.temps) {
        out += col == 0 ? "   " : " ";
        out += "t" + std::to_string(t) + ":Ity_" + std::string(type_name(ty));
        if (++col == 8) {
            out += "\n";
            col = 0;
        }
    }
    if (col) out += "\n";
    for (std::size_t i = 0; i < b.stmts.size(); ++i)
        out += "   " + format_index(i) + " | " + print_statement(b.stmts[i]) + "\n";
    out += "   NEXT: PUT(offset=" + std::to_string(b.next_pc_offset) + ") = " + print_expr(b.next) + "; Ijk_" +
           std::string(jumpkind_name(b.next_jumpkind)) + "\n";
    out += "}\n";
    return out;
}

inline std::string print_program(const Program& p) {
    std::string out;
    bool first = true;
    for (const auto& [addr, b] : p.blocks) {
        if (!first) out += "\n";
        first = false;
        out += print_irsb(b);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace detail {

/// Cursor over one source line; columns are 1-based.
class LineCursor {
public:
    LineCursor(std::string_view line, int line_no) : line_(line), line_no_(line_no) {}

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(line_no_, static_cast<int>(pos_) + 1, msg, std::string(line_));
    }

    void skip_ws() {
        while (pos_ < line_.size() && (line_[pos_] == ' ' || line_[pos_] == '\t' || line_[pos_] == '\r')) ++pos_;
    }
    bool at_end() {
        skip_ws();
        return pos_ >= line_.size();
    }
    bool peek(std::string_view lit) {
        skip_ws();
        return line_.substr(pos_, lit.size()) == lit;
    }
    char peek_char() {
        skip_ws();
        return pos_ < line_.size() ? line_[pos_] : '\0';
    }
    bool accept(std::string_view lit) {
        if (!peek(lit)) return false;
        pos_ += lit.size();
        return true;
    }
    void expect(std::string_view lit) {
        if (!accept(lit)) fail("expected '" + std::string(lit) + "'");
    }
    std::string_view word() {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < line_.size() && (std::isalnum(static_cast<unsigned char>(line_[pos_])) || line_[pos_] == '_'))
            ++pos_;
        return line_.substr(start, pos_ - start);
    }
    std::int64_t integer() {
        skip_ws();
        std::size_t start = pos_;
        if (pos_ < line_.size() && line_[pos_] == '-') ++pos_;
        while (pos_ < line_.size() && std::isdigit(static_cast<unsigned char>(line_[pos_]))) ++pos_;
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(line_.data() + start, line_.data() + pos_, v);
        if (ec != std::errc() || start == pos_) {
            pos_ = start;
            fail("expected integer");
        }
        return v;
    }
    std::uint32_t offset_value() {
        auto v = integer();
        if (v < 0 || v > 0xFFFFFFFFLL) fail("offset out of range");
        return static_cast<std::uint32_t>(v);
    }
    /// Hex literal with 0x prefix; returns value and digit count.
    std::pair<std::uint64_t, std::size_t> hex() {
        skip_ws();
        std::size_t start = pos_;
        auto w = word();
        if (w.size() < 3 || w[0] != '0' || (w[1] != 'x' && w[1] != 'X')) {
            pos_ = start;
            fail("expected hex literal");
        }
        return parse_hex_word(w, start);
    }
    std::pair<std::uint64_t, std::size_t> parse_hex_word(std::string_view w, std::size_t start) {
        auto digits = w.substr(2);
        if (digits.size() > 16) {
            pos_ = start;
            fail("hex literal wider than 64 bits");
        }
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v, 16);
        if (ec != std::errc() || p != digits.data() + digits.size()) {
            pos_ = start;
            fail("malformed hex literal");
        }
        return {v, digits.size()};
    }
    std::size_t pos() const { return pos_; }
    void set_pos(std::size_t p) { pos_ = p; }

private:
    std::string_view line_;
    int line_no_;
    std::size_t pos_ = 0;
};

inline bool is_temp_word(std::string_view w) {
    if (w.size() < 2 || w[0] != 't') return false;
    for (std::size_t i = 1; i < w.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(w[i]))) return false;
    return true;
}

inline TempId temp_index(LineCursor& cur, std::string_view w) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(w.data() + 1, w.data() + w.size(), v);
    if (ec != std::errc() || v > 0xFFFFFFFFu) cur.fail("bad temp index");
    return static_cast<TempId>(v);
}

inline Ty const_type(std::uint64_t v, std::size_t digits, std::optional<Ty> expected) {
    if (expected && fits(v, *expected)) return *expected;
    switch (digits) {
        case 2: return Ty::I8;
        case 4: return Ty::I16;
        case 8: return Ty::I32;
        case 16: return Ty::I64;
        default: return Ty::I64;
    }
}

inline Ty parse_ty(LineCursor& cur) {
    auto w = cur.word();
    auto t = parse_type_name(w);
    if (!t) cur.fail("unknown type '" + std::string(w) + "'");
    return *t;
}

inline ExprPtr parse_expr(LineCursor& cur, std::optional<Ty> expected) {
    if (cur.accept("GET:")) {
        Ty t = parse_ty(cur);
        cur.expect("(");
        cur.expect("offset=");
        auto off = cur.offset_value();
        cur.expect(")");
        return mk_get(off, t);
    }
    if (cur.accept("LDle:")) {
        Ty t = parse_ty(cur);
        cur.expect("(");
        auto addr = parse_expr(cur, Ty::I64);
        cur.expect(")");
        return mk_load(t, std::move(addr));
    }
    if (cur.accept("ITE(")) {
        auto c = parse_expr(cur, Ty::I1);
        cur.expect(",");
        auto a = parse_expr(cur, expected);
        cur.expect(",");
        auto b = parse_expr(cur, expected);
        cur.expect(")");
        return mk_ite(std::move(c), std::move(a), std::move(b));
    }
    cur.skip_ws();
    const std::size_t start = cur.pos();
    auto w = cur.word();
    if (w.empty()) cur.fail("expected expression");
    if (cur.peek_char() == '(') {
        cur.expect("(");
        std::vector<ExprPtr> args;
        auto op = parse_op(w);
        std::vector<Ty> arg_types;
        if (op) arg_types = signature(*op).args;
        do {
            std::optional<Ty> ctx;
            if (args.size() < arg_types.size()) ctx = arg_types[args.size()];
            args.push_back(parse_expr(cur, ctx));
        } while (cur.accept(","));
        cur.expect(")");
        if (!op) return mk_opaque(std::string(w), std::move(args));
        if (args.size() != arg_types.size()) {
            cur.set_pos(start);
            cur.fail(std::string(w) + " takes " + std::to_string(arg_types.size()) + " operand(s)");
        }
        if (args.size() == 1) return mk_unop(*op, std::move(args[0]));
        return mk_binop(*op, std::move(args[0]), std::move(args[1]));
    }
    if (w.size() > 2 && w[0] == '0' && (w[1] == 'x' || w[1] == 'X')) {
        auto [v, digits] = cur.parse_hex_word(w, start);
        return mk_const(v, const_type(v, digits, expected));
    }
    if (is_temp_word(w)) return mk_tmp(temp_index(cur, w));
    if (w == "0" || w == "1") return mk_const(w == "1" ? 1 : 0, Ty::I1);
    cur.set_pos(start);
    cur.fail("unexpected token '" + std::string(w) + "'");
}

inline JumpKind parse_ijk(LineCursor& cur) {
    cur.expect("Ijk_");
    auto w = cur.word();
    auto k = parse_jumpkind(w);
    if (!k) cur.fail("unknown jump kind '" + std::string(w) + "'");
    return *k;
}

inline Statement parse_body(LineCursor& cur, const TempTypes& temps) {
    if (cur.accept("------")) {
        cur.expect("IMark(");
        auto [addr, digits] = cur.hex();
        cur.expect(",");
        auto len = cur.integer();
        cur.expect(",");
        auto delta = cur.integer();
        cur.expect(")");
        cur.expect("------");
        if (len < 0) cur.fail("negative IMark length");
        return IMark{addr, static_cast<std::uint32_t>(len), static_cast<std::int32_t>(delta)};
    }
    if (cur.accept("PUT(")) {
        cur.expect("offset=");
        auto off = cur.offset_value();
        cur.expect(")");
        cur.expect("=");
        return Put{off, parse_expr(cur, std::nullopt)};
    }
    if (cur.accept("STOREle(")) {
        auto addr = parse_expr(cur, Ty::I64);
        cur.expect(")");
        cur.expect("=");
        return Store{std::move(addr), parse_expr(cur, std::nullopt)};
    }
    if (cur.accept("if")) {
        cur.expect("(");
        auto guard = parse_expr(cur, Ty::I1);
        cur.expect(")");
        cur.expect("{");
        cur.expect("PUT(");
        cur.expect("offset=");
        auto off = cur.offset_value();
        cur.expect(")");
        cur.expect("=");
        auto [target, digits] = cur.hex();
        cur.expect(";");
        auto jk = parse_ijk(cur);
        cur.expect("}");
        return Exit{std::move(guard), target, jk, off};
    }
    if (cur.accept("NoOp")) return NoOp{};
    const std::size_t start = cur.pos();
    auto w = cur.word();
    if (!is_temp_word(w)) {
        cur.set_pos(start);
        cur.fail("expected statement");
    }
    TempId t = temp_index(cur, w);
    cur.expect("=");
    std::optional<Ty> ctx;
    if (auto it = temps.find(t); it != temps.end()) ctx = it->second;
    return WrTmp{t, parse_expr(cur, ctx)};
}

inline void expect_end(LineCursor& cur) {
    if (!cur.at_end()) cur.fail("unexpected trailing text");
}

inline std::string_view strip_comment(std::string_view line) {
    if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    return line;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

/// True for "NN |" statement lines.
inline bool is_stmt_line(std::string_view t) {
    std::size_t i = 0;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
    if (i == 0) return false;
    while (i < t.size() && (t[i] == ' ' || t[i] == '\t')) ++i;
    return i < t.size() && t[i] == '|';
}

}  // namespace detail

/// Parses a single statement body (optionally with an "NN |" prefix) in the
/// given temp environment. Grammar only; typing is the caller's business.
inline Statement parse_statement(std::string_view text, const TempTypes& temps = {}) {
    detail::LineCursor cur(text, 1);
    if (detail::is_stmt_line(detail::trim(text))) {
        cur.integer();
        cur.expect("|");
    }
    auto s = detail::parse_body(cur, temps);
    detail::expect_end(cur);
    return s;
}

/// Parses concatenated IRSB sections; every block is validated.
inline Program parse_program(std::string_view text, std::string name = {}) {
    Program prog;
    prog.name = std::move(name);

    std::vector<std::string_view> lines;
    for (std::size_t start = 0; start <= text.size();) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }

    enum class State { Outside, Decls, Stmts, AfterNext } state = State::Outside;
    IrSb cur_block;
    int header_line = 0;
    std::string header_text;

    for (std::size_t li = 0; li < lines.size(); ++li) {
        const int line_no = static_cast<int>(li) + 1;
        auto raw = detail::strip_comment(lines[li]);
        auto t = detail::trim(raw);
        if (t.empty()) continue;
        detail::LineCursor cur(raw, line_no);

        if (state == State::Outside) {
            cur.expect("IRSB");
            cur.expect("@");
            auto [addr, digits] = cur.hex();
            cur.expect("{");
            detail::expect_end(cur);
            cur_block = IrSb{};
            cur_block.addr = addr;
            header_line = line_no;
            header_text = std::string(lines[li]);
            state = State::Decls;
            continue;
        }
        if (t == "}") {
            if (state != State::AfterNext) cur.fail("block ends without NEXT");
            auto violations = validate(cur_block);
            if (!violations.empty()) throw ValidationError(std::move(violations));
            if (prog.blocks.count(cur_block.addr))
                throw DuplicateAddressError(header_line, 1, "duplicate block address " + hex_addr(cur_block.addr),
                                            header_text);
            prog.blocks.emplace(cur_block.addr, std::move(cur_block));
            state = State::Outside;
            continue;
        }
        if (state == State::AfterNext) cur.fail("expected '}' after NEXT");
        if (t.rfind("NEXT:", 0) == 0) {
            cur.expect("NEXT:");
            cur.expect("PUT(");
            cur.expect("offset=");
            cur_block.next_pc_offset = cur.offset_value();
            cur.expect(")");
            cur.expect("=");
            cur_block.next = detail::parse_expr(cur, Ty::I64);
            cur.expect(";");
            cur_block.next_jumpkind = detail::parse_ijk(cur);
            detail::expect_end(cur);
            state = State::AfterNext;
            continue;
        }
        if (detail::is_stmt_line(t)) {
            cur.integer();
            cur.expect("|");
            cur_block.stmts.push_back(detail::parse_body(cur, cur_block.temps));
            detail::expect_end(cur);
            state = State::Stmts;
            continue;
        }
        if (state == State::Stmts) cur.fail("temp declarations must precede statements");
        while (!cur.at_end()) {
            auto w = cur.word();
            if (!detail::is_temp_word(w)) cur.fail("expected temp declaration");
            TempId id = detail::temp_index(cur, w);
            cur.expect(":");
            cur.expect("Ity_");
            Ty ty = detail::parse_ty(cur);
            if (!cur_block.temps.emplace(id, ty).second) cur.fail("temp declared twice");
        }
    }
    if (state != State::Outside)
        throw ParseError(static_cast<int>(lines.size()), 1, "unterminated block", header_text);
    return prog;
}

/// Parses text holding exactly one block.
inline IrSb parse_irsb(std::string_view text) {
    auto p = parse_program(text);
    if (p.blocks.size() != 1)
        throw ParseError(1, 1, "expected exactly one IRSB, found " + std::to_string(p.blocks.size()),
                         std::string(text.substr(0, text.find('\n'))));
    return std::move(p.blocks.begin()->second);
}

}  // namespace lift
