#pragma once

// Helpers shared by the JSON readers of sequences, assessments and plant
// overrides. Private to the library.

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sbst/error.hpp"
#include "sbst/step_machine.hpp"

namespace sbst::detail {

using nlohmann::json;

inline json parse_json(std::string_view text, std::string_view what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw Error(std::string(what) + ": malformed JSON: " + e.what());
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <typename T>
T get_field(const json& obj, const char* key, std::string_view what) {
    if (!obj.is_object() || !obj.contains(key)) {
        throw Error(std::string(what) + ": missing key '" + key + "'");
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(std::string(what) + ": key '" + key + "' has the wrong type");
    }
}

inline std::vector<StepTransition> parse_transitions(const json& doc, std::string_view what) {
    std::vector<StepTransition> out;
    if (!doc.contains("transitions")) return out;
    const auto& arr = doc.at("transitions");
    if (!arr.is_array()) throw Error(std::string(what) + ": 'transitions' must be an array");
    for (const auto& tr : arr) {
        for (const char* guard : {"when", "guard", "condition", "if"}) {
            if (tr.contains(guard)) {
                throw Error(std::string(what) + ": transition uses a '" + guard +
                            "' guard; only time-based 'after' transitions are supported");
            }
        }
        if (!tr.contains("after")) {
            throw Error(std::string(what) + ": transition lacks 'after'; only time-based transitions are supported");
        }
        out.push_back({get_field<std::string>(tr, "from", what), get_field<double>(tr, "after", what),
                       get_field<std::string>(tr, "next", what)});
    }
    return out;
}

}  // namespace sbst::detail
