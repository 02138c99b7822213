#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dbgnn {

using NodeIndex = std::uint32_t;
using Timestamp = std::int64_t;
using Count = std::uint64_t;

/// Malformed or inconsistent input data (files, labels, checkpoints).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parse failure tied to a 1-based line number of the input.
class ParseError : public DataError {
public:
    ParseError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Non-finite values during training or likelihood evaluation.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// String labels <-> dense indices, assigned in first-seen order.
class NodeSet {
public:
    NodeIndex intern(std::string_view label);
    NodeIndex index(std::string_view label) const;
    bool contains(std::string_view label) const;
    const std::string& label(NodeIndex i) const { return labels_.at(i); }
    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    bool operator==(const NodeSet& other) const { return labels_ == other.labels_; }

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, NodeIndex> index_;
};

using NodeSetPtr = std::shared_ptr<const NodeSet>;

}  // namespace dbgnn
