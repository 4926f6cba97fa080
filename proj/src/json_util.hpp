#pragma once

// Field access helpers that turn nlohmann type errors into ParseError with
// a dotted field path.

#include "aidcsim/scenario.hpp"

#include <nlohmann/json.hpp>

#include <initializer_list>
#include <string>

namespace aidcsim::detail {

using json = nlohmann::json;

inline std::string join_path(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

inline const json& require(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) {
        throw ParseError(path + ": expected an object");
    }
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ParseError(join_path(path, key) + ": missing field");
    }
    return *it;
}

inline double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) {
        throw ParseError(path + ": expected a number");
    }
    return v.get<double>();
}

inline int as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) {
        throw ParseError(path + ": expected an integer");
    }
    return v.get<int>();
}

inline std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) {
        throw ParseError(path + ": expected a string");
    }
    return v.get<std::string>();
}

inline double number(const json& obj, const char* key, const std::string& path) {
    return as_number(require(obj, key, path), join_path(path, key));
}

inline int integer(const json& obj, const char* key, const std::string& path) {
    return as_int(require(obj, key, path), join_path(path, key));
}

inline std::string string(const json& obj, const char* key, const std::string& path) {
    return as_string(require(obj, key, path), join_path(path, key));
}

// Optional overrides: leave `out` untouched when the key is absent.
inline void maybe(const json& obj, const char* key, const std::string& path, double& out) {
    if (obj.contains(key)) {
        out = as_number(obj.at(key), join_path(path, key));
    }
}

inline void maybe(const json& obj, const char* key, const std::string& path, int& out) {
    if (obj.contains(key)) {
        out = as_int(obj.at(key), join_path(path, key));
    }
}

inline void maybe(const json& obj, const char* key, const std::string& path, std::string& out) {
    if (obj.contains(key)) {
        out = as_string(obj.at(key), join_path(path, key));
    }
}

inline void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                           const std::string& path) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed) {
            if (it.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ParseError(join_path(path, it.key()) + ": unknown field");
        }
    }
}

// Parses text, reporting syntax errors with a 1-based line and column.
inline json parse_text(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t col = 1;
        const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                         ": invalid JSON");
    }
}

}  // namespace aidcsim::detail
