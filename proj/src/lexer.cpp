#include "lexer.hpp"

#include <cctype>
#include <sstream>

namespace volfair::lang::detail {

namespace {

bool continues_expression(const Token& t) {
  if (t.type == Tok::Op) return t.text == "+" || t.text == "-" || t.text == "*" || t.text == "/";
  return t.type == Tok::Name && (t.text == "and" || t.text == "or");
}

std::vector<Token> lex_line(const std::string& line, int line_no, std::size_t start) {
  std::vector<Token> out;
  std::size_t i = start;
  auto loc = [&](std::size_t at) { return SourceLoc{line_no, static_cast<int>(at) + 1}; };
  while (i < line.size()) {
    char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '#' || (c == '/' && i + 1 < line.size() && line[i + 1] == '/')) break;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < line.size() && (std::isalnum(static_cast<unsigned char>(line[j])) || line[j] == '_')) ++j;
      out.push_back({Tok::Name, line.substr(i, j - i), loc(i)});
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < line.size() && std::isdigit(line[i + 1]))) {
      std::size_t j = i;
      while (j < line.size() && (std::isdigit(static_cast<unsigned char>(line[j])) || line[j] == '.')) ++j;
      if (j < line.size() && (line[j] == 'e' || line[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < line.size() && (line[k] == '+' || line[k] == '-')) ++k;
        if (k < line.size() && std::isdigit(static_cast<unsigned char>(line[k]))) {
          j = k;
          while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
        }
      }
      out.push_back({Tok::Number, line.substr(i, j - i), loc(i)});
      i = j;
      continue;
    }
    static const char* two[] = {"<=", ">=", "==", "!=", "&&", "||"};
    bool matched = false;
    for (const char* op : two) {
      if (line.compare(i, 2, op) == 0) {
        std::string text = op;
        if (text == "&&") text = "and";
        if (text == "||") text = "or";
        out.push_back({text == "and" || text == "or" ? Tok::Name : Tok::Op, text, loc(i)});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string("+-*/()[],:=~<>;!").find(c) != std::string::npos) {
      out.push_back({Tok::Op, std::string(1, c), loc(i)});
      ++i;
      continue;
    }
    std::ostringstream msg;
    msg << "unexpected character '" << c << "'";
    throw ParseError(loc(i), msg.str());
  }
  return out;
}

}  // namespace

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> out;
  std::vector<int> indents{0};
  int depth = 0;
  bool open_line = false;
  int line_no = 0;
  std::istringstream in(text);
  std::string line;
  SourceLoc last{1, 1};

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    int width = 0;
    std::size_t start = 0;
    while (start < line.size() && (line[start] == ' ' || line[start] == '\t')) {
      width = line[start] == '\t' ? (width / 8 + 1) * 8 : width + 1;
      ++start;
    }
    std::vector<Token> toks = lex_line(line, line_no, start);
    if (toks.empty()) continue;
    last = toks.back().loc;

    bool continuation = open_line && (depth > 0 || continues_expression(toks.front()));
    if (!continuation) {
      if (open_line) out.push_back({Tok::Newline, "", toks.front().loc});
      if (width > indents.back()) {
        indents.push_back(width);
        out.push_back({Tok::Indent, "", toks.front().loc});
      } else {
        while (width < indents.back()) {
          indents.pop_back();
          out.push_back({Tok::Dedent, "", toks.front().loc});
        }
        if (width != indents.back()) throw ParseError(toks.front().loc, "inconsistent indentation");
      }
    }
    for (auto& t : toks) {
      if (t.type == Tok::Op && (t.text == "(" || t.text == "[")) ++depth;
      if (t.type == Tok::Op && (t.text == ")" || t.text == "]")) depth = depth > 0 ? depth - 1 : 0;
      if (t.type == Tok::Op && t.text == ";" && depth == 0) {
        out.push_back({Tok::Newline, "", t.loc});
        continue;
      }
      out.push_back(std::move(t));
    }
    open_line = true;
  }
  if (depth > 0) throw ParseError(last, "unclosed bracket at end of input");
  if (open_line) out.push_back({Tok::Newline, "", last});
  while (indents.size() > 1) {
    indents.pop_back();
    out.push_back({Tok::Dedent, "", last});
  }
  out.push_back({Tok::End, "", last});
  return out;
}

}  // namespace volfair::lang::detail
