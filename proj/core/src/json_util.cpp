#include "subterra/json_util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "subterra/errors.hpp"

namespace subterra {

using nlohmann::json;

namespace {

std::string field_name(std::string_view prefix, std::string_view key) {
    std::string name;
    if (!prefix.empty()) {
        name.append(prefix);
        name.push_back('.');
    }
    name.append(key);
    return name;
}

const json& require_field(const json& obj, std::string_view key, std::string_view prefix) {
    if (!obj.is_object()) {
        throw ParseError("field '" + std::string(prefix) + "': expected object");
    }
    const auto it = obj.find(std::string(key));
    if (it == obj.end()) {
        throw ParseError("missing field '" + field_name(prefix, key) + "'");
    }
    return *it;
}

}  // namespace

json parse_json_document(std::string_view text, std::string_view what) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        std::ostringstream msg;
        msg << what << ": JSON syntax error at line " << line << ": " << e.what();
        throw ParseError(msg.str());
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file_atomic(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write '" + tmp.string() + "'");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw std::runtime_error("write failed for '" + tmp.string() + "'");
        }
    }
    std::filesystem::rename(tmp, path);
}

double require_number(const json& obj, std::string_view key, std::string_view prefix) {
    const json& v = require_field(obj, key, prefix);
    if (!v.is_number()) {
        throw ParseError("field '" + field_name(prefix, key) + "': expected number");
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
        throw ParseError("field '" + field_name(prefix, key) + "': expected finite number");
    }
    return d;
}

double optional_number(const json& obj, std::string_view key, double fallback, std::string_view prefix) {
    if (!obj.is_object() || !obj.contains(std::string(key))) {
        return fallback;
    }
    return require_number(obj, key, prefix);
}

std::int64_t require_integer(const json& obj, std::string_view key, std::string_view prefix) {
    const json& v = require_field(obj, key, prefix);
    if (!v.is_number_integer()) {
        throw ParseError("field '" + field_name(prefix, key) + "': expected integer");
    }
    return v.get<std::int64_t>();
}

std::string require_string(const json& obj, std::string_view key, std::string_view prefix) {
    const json& v = require_field(obj, key, prefix);
    if (!v.is_string()) {
        throw ParseError("field '" + field_name(prefix, key) + "': expected string");
    }
    return v.get<std::string>();
}

std::vector<std::int64_t> require_int_array(const json& obj, std::string_view key, std::size_t length,
                                            std::string_view prefix) {
    const json& v = require_field(obj, key, prefix);
    if (!v.is_array() || v.size() != length) {
        throw ParseError("field '" + field_name(prefix, key) + "': expected array of " + std::to_string(length) +
                         " integers");
    }
    std::vector<std::int64_t> out;
    for (const json& e : v) {
        if (!e.is_number_integer()) {
            throw ParseError("field '" + field_name(prefix, key) + "': expected integers");
        }
        out.push_back(e.get<std::int64_t>());
    }
    return out;
}

Vec3 require_vec3(const json& obj, std::string_view key, std::string_view prefix) {
    const json& v = require_field(obj, key, prefix);
    if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number()) {
        throw ParseError("field '" + field_name(prefix, key) + "': expected [x, y, z]");
    }
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

std::vector<std::string> require_string_array(const json& obj, std::string_view key, std::string_view prefix) {
    const json& v = require_field(obj, key, prefix);
    if (!v.is_array()) {
        throw ParseError("field '" + field_name(prefix, key) + "': expected array of strings");
    }
    std::vector<std::string> out;
    for (const json& e : v) {
        if (!e.is_string()) {
            throw ParseError("field '" + field_name(prefix, key) + "': expected array of strings");
        }
        out.push_back(e.get<std::string>());
    }
    return out;
}

json to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

double round_micro(double value) { return std::round(value * 1e6) / 1e6; }

}  // namespace subterra
