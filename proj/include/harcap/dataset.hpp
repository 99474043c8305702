#pragma once

// Core domain records and their on-disk formats: manifests (CSV / JSONL),
// keyword lexicons (JSON object), generated captions (JSONL).

#include <harcap/error.hpp>
#include <harcap/text.hpp>

#include <json.hpp>

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace harcap {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

using ActivityLabel = std::string;

struct VideoRecord {
    std::string video_id;
    ActivityLabel label;
    int subject_id = 0;
    int camera_id = 0;
    std::string frames_uri;

    friend bool operator==(const VideoRecord&, const VideoRecord&) = default;
};

struct Manifest {
    std::vector<VideoRecord> records;
    std::set<ActivityLabel> taxonomy;

    friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// Label -> keyword list. Keywords are stored lowercase and in listing order.
struct KeywordLexicon {
    std::map<ActivityLabel, std::vector<std::string>> entries;

    bool contains(const ActivityLabel& label) const { return entries.count(label) != 0; }

    const std::vector<std::string>& at(const ActivityLabel& label) const {
        auto it = entries.find(label);
        if (it == entries.end()) {
            throw MissingLexiconEntry("no lexicon entry for label '" + label + "'");
        }
        return it->second;
    }

    friend bool operator==(const KeywordLexicon&, const KeywordLexicon&) = default;
};

enum class CaptionStatus { verified, exhausted };

inline std::string_view to_string(CaptionStatus s) {
    return s == CaptionStatus::verified ? "verified" : "exhausted";
}

struct CaptionRecord {
    std::string video_id;
    ActivityLabel label;
    std::string caption;
    std::vector<std::string> matched_keywords;
    int attempts = 1;
    CaptionStatus status = CaptionStatus::exhausted;

    friend bool operator==(const CaptionRecord&, const CaptionRecord&) = default;
};

enum class ManifestFormat { csv, jsonl };

inline ManifestFormat manifest_format_for(const fs::path& path) {
    return path.extension() == ".jsonl" ? ManifestFormat::jsonl : ManifestFormat::csv;
}

// ---------------------------------------------------------------------------
// File helpers

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes via a sibling temp file and rename, so readers never observe a
/// partially written file.
inline void write_file_atomic(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    static std::atomic<unsigned long> counter{0};
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid()) + "." +
           std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + "." +
           std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError("short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot rename into " + path.string());
    }
}

inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.emplace_back(line);
        start = end + 1;
    }
    return lines;
}

// ---------------------------------------------------------------------------
// CSV

namespace csv {

/// Splits one CSV line honoring double-quoted fields ("" escapes a quote).
inline std::vector<std::string> split_row(std::string_view line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back().push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back().push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back().push_back(c);
        }
    }
    if (quoted) throw ParseError("unterminated quote in CSV row: " + std::string(line));
    return fields;
}

inline std::string quote(std::string_view field) {
    if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += '"';
    return out;
}

}  // namespace csv

// ---------------------------------------------------------------------------
// Manifest

inline const std::vector<std::string>& manifest_columns() {
    static const std::vector<std::string> cols{"video_id", "label", "subject_id", "camera_id",
                                               "frames_uri"};
    return cols;
}

namespace detail {

inline int parse_nonneg_int(const std::string& s, const char* field, std::size_t row) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(s, &pos);
        if (pos != s.size() || v < 0) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("row " + std::to_string(row) + ": bad " + field + " '" + s + "'");
    }
}

inline void validate_record(const VideoRecord& r, std::size_t row) {
    auto where = "row " + std::to_string(row) + ": ";
    if (r.video_id.empty()) throw ParseError(where + "empty video_id");
    if (r.label.empty()) throw ParseError(where + "empty label");
    if (r.frames_uri.empty()) throw ParseError(where + "empty frames_uri");
    if (r.subject_id < 0 || r.camera_id < 0) throw ParseError(where + "negative id");
}

inline VideoRecord record_from_json(const json& j, std::size_t row) {
    auto field = [&](const char* name) -> const json& {
        if (!j.contains(name)) {
            throw ParseError("row " + std::to_string(row) + ": missing field '" + name + "'");
        }
        return j.at(name);
    };
    VideoRecord r;
    try {
        r.video_id = field("video_id").get<std::string>();
        r.label = field("label").get<std::string>();
        r.subject_id = field("subject_id").get<int>();
        r.camera_id = field("camera_id").get<int>();
        r.frames_uri = field("frames_uri").get<std::string>();
    } catch (const json::exception& e) {
        throw ParseError("row " + std::to_string(row) + ": " + e.what());
    }
    validate_record(r, row);
    return r;
}

}  // namespace detail

/// Builds a manifest from records, deriving the taxonomy and rejecting
/// duplicate video ids.
inline Manifest make_manifest(std::vector<VideoRecord> records) {
    Manifest m;
    std::set<std::string> seen;
    for (auto& r : records) {
        if (!seen.insert(r.video_id).second) {
            throw DuplicateId("duplicate video_id '" + r.video_id + "'");
        }
        m.taxonomy.insert(r.label);
    }
    m.records = std::move(records);
    return m;
}

inline Manifest parse_manifest_csv(std::string_view text) {
    auto lines = split_lines(text);
    std::vector<VideoRecord> records;
    std::size_t first = 0;
    while (first < lines.size() && trim(lines[first]).empty()) ++first;
    if (first == lines.size()) return {};

    auto header = csv::split_row(lines[first]);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[std::string(trim(header[i]))] = i;
    for (const auto& name : manifest_columns()) {
        if (!col.count(name)) throw ParseError("manifest header lacks column '" + name + "'");
    }
    for (std::size_t li = first + 1; li < lines.size(); ++li) {
        if (trim(lines[li]).empty()) continue;
        auto f = csv::split_row(lines[li]);
        if (f.size() != header.size()) {
            throw ParseError("row " + std::to_string(li + 1) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(f.size()));
        }
        VideoRecord r;
        r.video_id = f[col["video_id"]];
        r.label = f[col["label"]];
        r.subject_id = detail::parse_nonneg_int(f[col["subject_id"]], "subject_id", li + 1);
        r.camera_id = detail::parse_nonneg_int(f[col["camera_id"]], "camera_id", li + 1);
        r.frames_uri = f[col["frames_uri"]];
        detail::validate_record(r, li + 1);
        records.push_back(std::move(r));
    }
    return make_manifest(std::move(records));
}

inline Manifest parse_manifest_jsonl(std::string_view text) {
    std::vector<VideoRecord> records;
    auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        json j;
        try {
            j = json::parse(lines[i]);
        } catch (const json::exception& e) {
            throw ParseError("line " + std::to_string(i + 1) + ": " + e.what());
        }
        records.push_back(detail::record_from_json(j, i + 1));
    }
    return make_manifest(std::move(records));
}

inline Manifest load_manifest(const fs::path& path, ManifestFormat format) {
    auto text = read_file(path);
    return format == ManifestFormat::csv ? parse_manifest_csv(text) : parse_manifest_jsonl(text);
}

inline Manifest load_manifest(const fs::path& path) {
    return load_manifest(path, manifest_format_for(path));
}

inline ordered_json to_json(const VideoRecord& r) {
    ordered_json j;
    j["video_id"] = r.video_id;
    j["label"] = r.label;
    j["subject_id"] = r.subject_id;
    j["camera_id"] = r.camera_id;
    j["frames_uri"] = r.frames_uri;
    return j;
}

inline std::string format_manifest_csv(std::span<const VideoRecord> records,
                                       const std::vector<std::string>& extra_cols = {},
                                       const std::vector<std::vector<std::string>>& extra = {}) {
    std::string out = "video_id,label,subject_id,camera_id,frames_uri";
    for (const auto& c : extra_cols) out += "," + c;
    out += "\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        out += csv::quote(r.video_id) + "," + csv::quote(r.label) + "," +
               std::to_string(r.subject_id) + "," + std::to_string(r.camera_id) + "," +
               csv::quote(r.frames_uri);
        if (i < extra.size()) {
            for (const auto& v : extra[i]) out += "," + csv::quote(v);
        }
        out += "\n";
    }
    return out;
}

inline void save_manifest(const Manifest& m, const fs::path& path, ManifestFormat format) {
    if (format == ManifestFormat::csv) {
        write_file_atomic(path, format_manifest_csv(m.records));
        return;
    }
    std::string out;
    for (const auto& r : m.records) out += to_json(r).dump() + "\n";
    write_file_atomic(path, out);
}

// ---------------------------------------------------------------------------
// Keyword lexicon

inline KeywordLexicon parse_lexicon(std::string_view text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("lexicon: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("lexicon must be a JSON object of label -> [keywords]");

    KeywordLexicon lex;
    for (const auto& [label, arr] : j.items()) {
        if (label.empty()) throw ParseError("lexicon: empty label");
        if (!arr.is_array()) throw ParseError("lexicon entry '" + label + "' is not an array");
        if (arr.empty()) throw EmptyEntry("lexicon entry '" + label + "' has no keywords");

        std::vector<std::string> words;
        std::map<std::string, std::string> source_of;  // lowercase -> original spelling
        for (const auto& v : arr) {
            if (!v.is_string()) throw ParseError("lexicon entry '" + label + "': non-string keyword");
            auto raw = v.get<std::string>();
            auto kw = to_lower(raw);
            if (kw.empty()) throw ParseError("lexicon entry '" + label + "': empty keyword");
            if (std::any_of(kw.begin(), kw.end(), [](unsigned char c) { return std::isspace(c); })) {
                throw ParseError("lexicon entry '" + label + "': keyword '" + raw +
                                 "' contains whitespace");
            }
            auto [it, inserted] = source_of.emplace(kw, raw);
            // A verbatim repeat (the published Cook_Cleanup listing has one) is kept
            // as listed; two spellings folding onto one keyword are rejected.
            if (!inserted && it->second != raw) {
                throw DuplicateKeyword("lexicon entry '" + label + "': '" + it->second +
                                       "' and '" + raw + "' collide after lowercasing");
            }
            words.push_back(std::move(kw));
        }
        lex.entries.emplace(label, std::move(words));
    }
    return lex;
}

inline KeywordLexicon load_lexicon(const fs::path& path) { return parse_lexicon(read_file(path)); }

inline std::string format_lexicon(const KeywordLexicon& lex) {
    ordered_json j = ordered_json::object();
    for (const auto& [label, words] : lex.entries) j[label] = words;
    return j.dump(2) + "\n";
}

inline void save_lexicon(const KeywordLexicon& lex, const fs::path& path) {
    write_file_atomic(path, format_lexicon(lex));
}

// ---------------------------------------------------------------------------
// Captions

inline ordered_json to_json(const CaptionRecord& c) {
    ordered_json j;
    j["video_id"] = c.video_id;
    j["label"] = c.label;
    j["caption"] = c.caption;
    j["matched_keywords"] = c.matched_keywords;
    j["attempts"] = c.attempts;
    j["status"] = std::string(to_string(c.status));
    return j;
}

inline CaptionRecord caption_from_json(const json& j) {
    CaptionRecord c;
    try {
        c.video_id = j.at("video_id").get<std::string>();
        c.label = j.at("label").get<std::string>();
        c.caption = j.at("caption").get<std::string>();
        c.matched_keywords = j.at("matched_keywords").get<std::vector<std::string>>();
        c.attempts = j.at("attempts").get<int>();
        auto status = j.at("status").get<std::string>();
        if (status == "verified") c.status = CaptionStatus::verified;
        else if (status == "exhausted") c.status = CaptionStatus::exhausted;
        else throw ParseError("unknown caption status '" + status + "'");
    } catch (const json::exception& e) {
        throw ParseError(std::string("caption record: ") + e.what());
    }
    if (c.attempts < 1) throw ParseError("caption " + c.video_id + ": attempts must be >= 1");
    if ((c.status == CaptionStatus::verified) == c.matched_keywords.empty()) {
        throw ParseError("caption " + c.video_id +
                         ": status must be verified exactly when matched_keywords is non-empty");
    }
    return c;
}

inline std::string format_captions(std::span<const CaptionRecord> records) {
    std::string out;
    for (const auto& r : records) out += to_json(r).dump() + "\n";
    return out;
}

inline std::vector<CaptionRecord> parse_captions(std::string_view text) {
    std::vector<CaptionRecord> out;
    auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        json j;
        try {
            j = json::parse(lines[i]);
        } catch (const json::exception& e) {
            throw ParseError("captions line " + std::to_string(i + 1) + ": " + e.what());
        }
        out.push_back(caption_from_json(j));
    }
    return out;
}

inline void save_captions(std::span<const CaptionRecord> records, const fs::path& path) {
    write_file_atomic(path, format_captions(records));
}

inline std::vector<CaptionRecord> load_captions(const fs::path& path) {
    return parse_captions(read_file(path));
}

}  // namespace harcap
