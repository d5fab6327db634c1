// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace samosa::config {

/// Scalar or array value of the run-config document. The document format is
/// a small TOML-style dialect: `key = value` lines, `[table]` sections,
/// `[[hook]]` array-of-tables, `#` comments. Values are strings, integers,
/// booleans, and flat arrays.
struct DocValue {
    using Array = std::vector<DocValue>;
    std::variant<std::string, std::int64_t, bool, Array> v;

    DocValue() : v(std::string{}) {}
    DocValue(std::string s) : v(std::move(s)) {}
    DocValue(const char* s) : v(std::string(s)) {}
    DocValue(std::int64_t i) : v(i) {}
    DocValue(bool b) : v(b) {}
    DocValue(Array a) : v(std::move(a)) {}

    bool is_string() const { return std::holds_alternative<std::string>(v); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(v); }
    bool is_bool() const { return std::holds_alternative<bool>(v); }
    bool is_array() const { return std::holds_alternative<Array>(v); }

    const std::string& as_string() const { return std::get<std::string>(v); }
    std::int64_t as_int() const { return std::get<std::int64_t>(v); }
    bool as_bool() const { return std::get<bool>(v); }
    const Array& as_array() const { return std::get<Array>(v); }
};

struct DocTable {
    // Preserves declaration order so serialization round-trips pleasantly.
    std::vector<std::pair<std::string, DocValue>> entries;

    const DocValue* find(const std::string& key) const;
    void set(const std::string& key, DocValue value);
};

struct Document {
    DocTable root;
    std::vector<std::pair<std::string, DocTable>> tables; // [name] sections
    std::vector<DocTable> hooks;                          // [[hook]] entries

    const DocTable* table(const std::string& name) const;
};

/// Parse document text. Throws SyntaxError on malformed input.
Document parse_document(const std::string& text);

/// Render a document back to text (inverse of parse_document).
std::string serialize_document(const Document& doc);

} // namespace samosa::config
