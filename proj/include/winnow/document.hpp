#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "winnow/errors.hpp"
#include "winnow/utf8.hpp"

namespace winnow {

// One corpus record. `meta` is an open object; well-known keys used by
// the pipeline stages: quality_label (low|medium|high), ppl_bucket
// (head|middle|tail), score (real), dup_count (integer >= 1), plus the
// statistical metrics written by enrichment.
struct Document {
    std::string id;
    std::string text;
    std::string lang;
    std::string source;
    nlohmann::json meta = nlohmann::json::object();

    bool operator==(const Document& other) const {
        return id == other.id && text == other.text && lang == other.lang &&
               source == other.source && meta == other.meta;
    }
};

inline std::optional<double> meta_number(const Document& doc, const std::string& key) {
    auto it = doc.meta.find(key);
    if (it == doc.meta.end() || !it->is_number()) return std::nullopt;
    return it->get<double>();
}

inline std::optional<std::string> meta_string(const Document& doc, const std::string& key) {
    auto it = doc.meta.find(key);
    if (it == doc.meta.end() || !it->is_string()) return std::nullopt;
    return it->get<std::string>();
}

inline uint64_t dup_count(const Document& doc) {
    auto it = doc.meta.find("dup_count");
    if (it == doc.meta.end() || !it->is_number_unsigned()) return 1;
    return it->get<uint64_t>();
}

inline nlohmann::json document_to_json(const Document& doc) {
    nlohmann::json j;
    j["id"] = doc.id;
    j["text"] = doc.text;
    j["lang"] = doc.lang;
    j["source"] = doc.source;
    j["meta"] = doc.meta;
    return j;
}

inline Document document_from_json(const nlohmann::json& j) {
    Document doc;
    for (const char* key : {"id", "text", "lang", "source"}) {
        auto it = j.find(key);
        if (it == j.end() || !it->is_string())
            throw DataError(std::string("record missing string field '") + key + "'");
    }
    doc.id = j.at("id").get<std::string>();
    doc.text = j.at("text").get<std::string>();
    doc.lang = j.at("lang").get<std::string>();
    doc.source = j.at("source").get<std::string>();
    if (doc.id.empty()) throw DataError("record with empty id");
    if (doc.text.empty()) throw DataError("record with empty text: id=" + doc.id);
    auto it = j.find("meta");
    if (it != j.end()) {
        if (!it->is_object()) throw DataError("meta is not an object: id=" + doc.id);
        doc.meta = *it;
    }
    return doc;
}

// Write-side validation; readers get this for free from strict JSON parsing.
inline void validate_for_write(const Document& doc) {
    if (doc.id.empty()) throw DataError("cannot write document with empty id");
    if (doc.text.empty()) throw DataError("cannot write document with empty text: id=" + doc.id);
    if (!utf8::valid(doc.id) || !utf8::valid(doc.text) || !utf8::valid(doc.lang) ||
        !utf8::valid(doc.source))
        throw DataError("document contains invalid UTF-8: id=" + doc.id);
}

} // namespace winnow
