#pragma once

#include <string>

#include "lift/ir.hpp"
#include "lift/text.hpp"

namespace lift::test {

inline ExprPtr c64(std::uint64_t v) { return mk_const(v, Ty::I64); }
inline ExprPtr t(TempId id) { return mk_tmp(id); }
inline Op op64(OpKind k) { return {k, Ty::I64}; }

/// Wraps statement lines into a single-block program text.
inline std::string block_text(const std::string& decls, const std::string& body,
                              const std::string& next = "0x0000000000001000", std::uint64_t addr = 0x1000) {
    std::string s = "IRSB @ " + hex_addr(addr) + " {\n";
    if (!decls.empty()) s += "   " + decls + "\n";
    s += body;
    s += "   NEXT: PUT(offset=184) = " + next + "; Ijk_Boring\n}\n";
    return s;
}

inline IrSb block_of(const std::string& decls, const std::string& body,
                     const std::string& next = "0x0000000000001000", std::uint64_t addr = 0x1000) {
    return parse_irsb(block_text(decls, body, next, addr));
}

}  // namespace lift::test
