// SPDX-License-Identifier: Apache-2.0
#include "samosa/config_doc.hpp"

#include "samosa/errors.hpp"

#include <cctype>
#include <sstream>

namespace samosa::config {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Removes a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (c == '"' && (i == 0 || line[i - 1] != '\\'))
            in_str = !in_str;
        else if (c == '#' && !in_str)
            return line.substr(0, i);
    }
    return line;
}

bool valid_key(const std::string& k) {
    if (k.empty())
        return false;
    for (char c : k)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
            return false;
    return true;
}

class ValueParser {
public:
    ValueParser(const std::string& text, int line_no) : s_(text), line_no_(line_no) {}

    DocValue parse() {
        DocValue v = parse_value();
        skip_ws();
        if (pos_ != s_.size())
            fail("trailing characters after value");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& what) {
        throw SyntaxError("line " + std::to_string(line_no_) + ": " + what);
    }

    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t'))
            ++pos_;
    }

    DocValue parse_value() {
        skip_ws();
        if (pos_ >= s_.size())
            fail("missing value");
        char c = s_[pos_];
        if (c == '"')
            return parse_string();
        if (c == '[')
            return parse_array();
        return parse_scalar();
    }

    DocValue parse_string() {
        ++pos_; // opening quote
        std::string out;
        while (pos_ < s_.size()) {
            char c = s_[pos_++];
            if (c == '"')
                return DocValue(out);
            if (c == '\\') {
                if (pos_ >= s_.size())
                    fail("unterminated escape");
                char e = s_[pos_++];
                switch (e) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case 'r': out += '\r'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: fail(std::string("unknown escape \\") + e);
                }
            } else {
                out += c;
            }
        }
        fail("unterminated string");
    }

    DocValue parse_array() {
        ++pos_; // '['
        DocValue::Array items;
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {
            ++pos_;
            return DocValue(std::move(items));
        }
        while (true) {
            items.push_back(parse_value());
            skip_ws();
            if (pos_ >= s_.size())
                fail("unterminated array");
            if (s_[pos_] == ',') {
                ++pos_;
                continue;
            }
            if (s_[pos_] == ']') {
                ++pos_;
                return DocValue(std::move(items));
            }
            fail("expected ',' or ']' in array");
        }
    }

    DocValue parse_scalar() {
        size_t start = pos_;
        while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']')
            ++pos_;
        std::string tok = trim(s_.substr(start, pos_ - start));
        if (tok == "true")
            return DocValue(true);
        if (tok == "false")
            return DocValue(false);
        if (tok.empty())
            fail("empty value");
        size_t i = (tok[0] == '-' || tok[0] == '+') ? 1 : 0;
        if (i >= tok.size())
            fail("bad value '" + tok + "'");
        for (size_t j = i; j < tok.size(); ++j)
            if (!std::isdigit(static_cast<unsigned char>(tok[j])))
                fail("bad value '" + tok + "' (strings must be quoted)");
        try {
            return DocValue(static_cast<std::int64_t>(std::stoll(tok)));
        } catch (const std::exception&) {
            fail("integer out of range: '" + tok + "'");
        }
    }

    const std::string& s_;
    size_t pos_ = 0;
    int line_no_;
};

std::string escape_string(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default: out += c;
        }
    }
    out += '"';
    return out;
}

std::string render_value(const DocValue& v) {
    if (v.is_string())
        return escape_string(v.as_string());
    if (v.is_int())
        return std::to_string(v.as_int());
    if (v.is_bool())
        return v.as_bool() ? "true" : "false";
    std::string out = "[";
    const auto& arr = v.as_array();
    for (size_t i = 0; i < arr.size(); ++i) {
        if (i)
            out += ", ";
        out += render_value(arr[i]);
    }
    out += "]";
    return out;
}

void render_table(std::ostringstream& os, const DocTable& t) {
    for (const auto& [k, v] : t.entries)
        os << k << " = " << render_value(v) << "\n";
}

} // namespace

const DocValue* DocTable::find(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key)
            return &v;
    return nullptr;
}

void DocTable::set(const std::string& key, DocValue value) {
    for (auto& [k, v] : entries) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    entries.emplace_back(key, std::move(value));
}

const DocTable* Document::table(const std::string& name) const {
    for (const auto& [n, t] : tables)
        if (n == name)
            return &t;
    return nullptr;
}

Document parse_document(const std::string& text) {
    Document doc;
    DocTable* current = &doc.root;

    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(strip_comment(raw));
        if (line.empty())
            continue;

        if (line.size() >= 4 && line.substr(0, 2) == "[[") {
            if (line.substr(line.size() - 2) != "]]")
                throw SyntaxError("line " + std::to_string(line_no) +
                                  ": malformed array-of-tables header");
            std::string name = trim(line.substr(2, line.size() - 4));
            if (!valid_key(name))
                throw SyntaxError("line " + std::to_string(line_no) +
                                  ": bad table name '" + name + "'");
            if (name != "hook")
                throw SchemaError("line " + std::to_string(line_no) +
                                  ": unknown array-of-tables [[" + name + "]]");
            doc.hooks.emplace_back();
            current = &doc.hooks.back();
            continue;
        }

        if (line.front() == '[') {
            if (line.back() != ']')
                throw SyntaxError("line " + std::to_string(line_no) +
                                  ": malformed table header");
            std::string name = trim(line.substr(1, line.size() - 2));
            if (!valid_key(name))
                throw SyntaxError("line " + std::to_string(line_no) +
                                  ": bad table name '" + name + "'");
            doc.tables.emplace_back(name, DocTable{});
            current = &doc.tables.back().second;
            continue;
        }

        size_t eq = std::string::npos;
        {
            bool in_str = false;
            for (size_t i = 0; i < line.size(); ++i) {
                char c = line[i];
                if (c == '"' && (i == 0 || line[i - 1] != '\\'))
                    in_str = !in_str;
                else if (c == '=' && !in_str) {
                    eq = i;
                    break;
                }
            }
        }
        if (eq == std::string::npos)
            throw SyntaxError("line " + std::to_string(line_no) +
                              ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        if (!valid_key(key))
            throw SyntaxError("line " + std::to_string(line_no) + ": bad key '" +
                              key + "'");
        std::string value_text = trim(line.substr(eq + 1));
        DocValue value = ValueParser(value_text, line_no).parse();
        if (current->find(key))
            throw SyntaxError("line " + std::to_string(line_no) +
                              ": duplicate key '" + key + "'");
        current->set(key, std::move(value));
    }
    return doc;
}

std::string serialize_document(const Document& doc) {
    std::ostringstream os;
    render_table(os, doc.root);
    for (const auto& [name, table] : doc.tables) {
        os << "\n[" << name << "]\n";
        render_table(os, table);
    }
    for (const auto& hook : doc.hooks) {
        os << "\n[[hook]]\n";
        render_table(os, hook);
    }
    return os.str();
}

} // namespace samosa::config
