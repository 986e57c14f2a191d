#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace nl2sql360 {

/// BLOB cells are carried as a content hash, not as bytes.
struct BlobHash {
    std::string hex;

    bool operator==(const BlobHash&) const = default;
};

/// NULL, INTEGER, REAL, TEXT or BLOB.
using Value = std::variant<std::monostate, std::int64_t, double, std::string, BlobHash>;

struct ResultTable {
    std::size_t column_count = 0;
    std::vector<std::vector<Value>> rows;

    bool operator==(const ResultTable&) const = default;
};

std::string to_display(const Value& v);

}  // namespace nl2sql360
