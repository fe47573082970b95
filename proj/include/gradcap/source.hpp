#pragma once

#include <cstdint>
#include <string>

namespace gradcap {

struct SourcePos {
    int line = 1;
    int column = 1;

    friend bool operator==(const SourcePos&, const SourcePos&) = default;
    friend auto operator<=>(const SourcePos&, const SourcePos&) = default;
};

// Half-open region of a source file; start <= end.
struct SourceSpan {
    std::string file;
    SourcePos start;
    SourcePos end;

    friend bool operator==(const SourceSpan&, const SourceSpan&) = default;

    std::string to_string() const {
        return file + ":" + std::to_string(start.line) + ":" + std::to_string(start.column);
    }
};

} // namespace gradcap
