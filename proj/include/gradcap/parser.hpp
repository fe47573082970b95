#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "gradcap/ast.hpp"
#include "gradcap/source.hpp"

namespace gradcap {

class ParseError : public std::runtime_error {
  public:
    ParseError(SourceSpan span, std::string message, std::vector<std::string> expected = {})
        : std::runtime_error(span.to_string() + ": " + message),
          span_(std::move(span)),
          message_(std::move(message)),
          expected_(std::move(expected)) {}

    const SourceSpan& span() const { return span_; }
    const std::string& message() const { return message_; }
    const std::vector<std::string>& expected() const { return expected_; }

  private:
    SourceSpan span_;
    std::string message_;
    std::vector<std::string> expected_;
};

/// Parses `.gcap` source text. Throws ParseError on the first malformed
/// construct. `file` is used for spans only.
Program parse_program(const std::string& text, const std::string& file = "<input>");

/// Reads and parses a file.
Program parse_file(const std::string& path);

} // namespace gradcap
