#pragma once

#include <string>
#include <vector>

#include "volfair/lang.hpp"

namespace volfair::lang::detail {

enum class Tok { Name, Number, Op, Newline, Indent, Dedent, End };

struct Token {
  Tok type = Tok::End;
  std::string text;
  SourceLoc loc;
};

/// Python-style tokenization: INDENT/DEDENT from leading whitespace, `#` and
/// `//` comments, `;` as a statement separator. A line continues the previous
/// one when brackets are open or when it starts with a binary operator.
std::vector<Token> tokenize(const std::string& text);

}  // namespace volfair::lang::detail
