#include "cbias/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <json.hpp>
#include <spdlog/spdlog.h>
#include <zlib.h>

#include "cbias/errors.h"
#include "cbias/util.h"

namespace cbias {

InputFormat parse_input_format(std::string_view name) {
    if (name == "jsonl") return InputFormat::kJsonl;
    if (name == "jsonl-gzip" || name == "jsonl.gz") return InputFormat::kJsonlGzip;
    if (name == "plain-text" || name == "text") return InputFormat::kPlainText;
    throw ArgumentError("unknown corpus format '" + std::string(name) +
                        "' (expected jsonl, jsonl-gzip or plain-text)");
}

std::string_view to_string(InputFormat format) {
    switch (format) {
    case InputFormat::kJsonl: return "jsonl";
    case InputFormat::kJsonlGzip: return "jsonl-gzip";
    case InputFormat::kPlainText: return "plain-text";
    }
    return "jsonl";
}

// Line reader over either a plain file or a gzip stream.
class CommentReader::LineSource {
public:
    LineSource(const std::filesystem::path &path, bool gzip) : gzip_(gzip) {
        if (gzip_) {
            gz_ = gzopen(path.c_str(), "rb");
            if (!gz_) throw IoError("cannot open " + path.string());
        } else {
            in_.open(path, std::ios::binary);
            if (!in_) throw IoError("cannot open " + path.string());
        }
    }
    ~LineSource() {
        if (gz_) gzclose(gz_);
    }

    bool getline(std::string &line) {
        if (!gzip_) return static_cast<bool>(std::getline(in_, line));
        line.clear();
        char buffer[1 << 16];
        while (true) {
            if (!gzgets(gz_, buffer, sizeof(buffer))) {
                int code = 0;
                const char *msg = gzerror(gz_, &code);
                if (code != Z_OK && code != Z_STREAM_END) {
                    throw IoError(std::string("gzip read error: ") + msg);
                }
                return !line.empty();
            }
            line += buffer;
            if (!line.empty() && line.back() == '\n') {
                line.pop_back();
                return true;
            }
        }
    }

private:
    bool gzip_;
    std::ifstream in_;
    gzFile gz_ = nullptr;
};

CommentReader::CommentReader(const std::filesystem::path &path, InputFormat format)
    : format_(format) {
    if (!std::filesystem::is_regular_file(path)) {
        throw IoError("cannot read corpus file " + path.string());
    }
    source_ = std::make_unique<LineSource>(path, format == InputFormat::kJsonlGzip);
}

CommentReader::~CommentReader() = default;

std::string CommentReader::unique_id(std::string candidate) {
    if (candidate.empty() || seen_ids_.count(candidate)) {
        candidate = "line:" + std::to_string(line_number_);
    }
    seen_ids_.insert(candidate);
    return candidate;
}

bool CommentReader::parse_json_line(const std::string &line, CommentRecord &record) {
    auto doc = nlohmann::json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        ++stats_.malformed;
        return false;
    }
    auto body = doc.find("body");
    if (body == doc.end() || !body->is_string()) {
        ++stats_.missing_body;
        return false;
    }
    record = CommentRecord{};
    record.body = body->get<std::string>();
    std::string id;
    if (auto it = doc.find("id"); it != doc.end()) {
        if (it->is_string()) {
            id = it->get<std::string>();
        } else if (it->is_number_integer()) {
            id = std::to_string(it->get<std::int64_t>());
        }
    }
    record.id = unique_id(std::move(id));
    if (auto it = doc.find("subreddit"); it != doc.end() && it->is_string()) {
        record.subreddit = it->get<std::string>();
    }
    if (auto it = doc.find("author"); it != doc.end() && it->is_string()) {
        record.author = it->get<std::string>();
    }
    if (auto it = doc.find("created_utc"); it != doc.end()) {
        if (it->is_number()) {
            record.created_utc = static_cast<std::int64_t>(it->get<double>());
        } else if (it->is_string()) {
            try {
                record.created_utc = std::stoll(it->get<std::string>());
            } catch (const std::exception &) {
            }
        }
    }
    return true;
}

bool CommentReader::next(CommentRecord &record) {
    std::string line;
    while (source_->getline(line)) {
        ++line_number_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        ++stats_.lines;
        if (format_ == InputFormat::kPlainText) {
            record = CommentRecord{};
            record.id = unique_id({});
            record.body = std::move(line);
            ++stats_.records;
            return true;
        }
        if (parse_json_line(line, record)) {
            ++stats_.records;
            return true;
        }
    }
    if (!finished_) {
        finished_ = true;
        // A single bad line is always tolerated so tiny files are not
        // rejected outright.
        if (stats_.malformed > 1 && stats_.malformed * 10 > stats_.lines) {
            throw FormatError("corpus has " + std::to_string(stats_.malformed) +
                              " malformed lines out of " +
                              std::to_string(stats_.lines) + " (limit 10%)");
        }
        if (stats_.malformed || stats_.missing_body) {
            spdlog::warn("skipped {} malformed lines and {} records without body",
                         stats_.malformed, stats_.missing_body);
        }
    }
    return false;
}

std::vector<CommentRecord> ingest(const std::filesystem::path &path,
                                  InputFormat format, IngestStats *stats) {
    CommentReader reader(path, format);
    std::vector<CommentRecord> records;
    CommentRecord record;
    while (reader.next(record)) records.push_back(std::move(record));
    if (stats) *stats = reader.stats();
    return records;
}

namespace {

bool is_sentence_break(char c) {
    return c == '.' || c == '!' || c == '?' || c == '\n';
}

bool is_token_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'';
}

}  // namespace

std::vector<Sentence> preprocess(std::string_view text) {
    std::vector<Sentence> sentences;
    Sentence current;
    std::string token;
    auto flush_token = [&] {
        if (!token.empty()) {
            current.push_back(std::move(token));
            token.clear();
        }
    };
    auto flush_sentence = [&] {
        flush_token();
        if (!current.empty()) {
            sentences.push_back(std::move(current));
            current.clear();
        }
    };
    for (char raw : text) {
        char c = (raw >= 'A' && raw <= 'Z') ? static_cast<char>(raw - 'A' + 'a') : raw;
        if (is_sentence_break(c)) {
            flush_sentence();
        } else if (is_token_char(c)) {
            token += c;
        } else {
            flush_token();
        }
    }
    flush_sentence();
    return sentences;
}

void TokenizedCorpus::Builder::add_comment(std::vector<Sentence> sentences) {
    for (auto &s : sentences) sentences_.push_back(std::move(s));
    offsets_.push_back(sentences_.size());
}

TokenizedCorpus TokenizedCorpus::Builder::build() && {
    TokenizedCorpus corpus;
    corpus.sentences_ = std::move(sentences_);
    corpus.offsets_ = std::move(offsets_);
    return corpus;
}

TokenizedCorpus TokenizedCorpus::from_records(std::span<const CommentRecord> records) {
    Builder builder;
    for (const auto &r : records) builder.add_comment(preprocess(r.body));
    return std::move(builder).build();
}

TokenizedCorpus TokenizedCorpus::load(const std::filesystem::path &path,
                                      InputFormat format, IngestStats *stats) {
    CommentReader reader(path, format);
    Builder builder;
    CommentRecord record;
    while (reader.next(record)) builder.add_comment(preprocess(record.body));
    if (stats) *stats = reader.stats();
    return std::move(builder).build();
}

std::span<const Sentence> TokenizedCorpus::comment(std::size_t i) const {
    return std::span<const Sentence>(sentences_).subspan(
        offsets_.at(i), offsets_.at(i + 1) - offsets_[i]);
}

CorpusStats TokenizedCorpus::stats() const {
    CorpusStats stats;
    stats.comments = comment_count();
    stats.sentences = sentences_.size();
    std::unordered_set<std::string_view> unique;
    for (const auto &s : sentences_) {
        stats.tokens += s.size();
        for (const auto &t : s) unique.insert(t);
    }
    stats.unique_tokens = unique.size();
    return stats;
}

TokenizedCorpus bootstrap_sample(const TokenizedCorpus &corpus, double fraction,
                                 std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw ArgumentError("bootstrap fraction must lie in (0, 1]");
    }
    if (corpus.empty()) throw ArgumentError("cannot sample an empty corpus");
    const std::size_t n = corpus.comment_count();
    const auto take = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));

    // Partial Fisher-Yates over comment indices.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    for (std::size_t i = 0; i < take; ++i) {
        std::size_t j = i + rng.below(n - i);
        std::swap(order[i], order[j]);
    }
    order.resize(take);
    std::sort(order.begin(), order.end());
    TokenizedCorpus::Builder builder;
    for (std::size_t i = 0; i < take; ++i) {
        auto c = corpus.comment(order[i]);
        builder.add_comment(std::vector<Sentence>(c.begin(), c.end()));
    }
    return std::move(builder).build();
}

std::string stats_json(const CorpusStats &stats, const IngestStats *ingest) {
    nlohmann::json j = {{"comments", stats.comments},
                        {"sentences", stats.sentences},
                        {"tokens", stats.tokens},
                        {"unique_tokens", stats.unique_tokens}};
    if (ingest) {
        j["ingest"] = {{"lines", ingest->lines},
                       {"records", ingest->records},
                       {"malformed", ingest->malformed},
                       {"missing_body", ingest->missing_body}};
    }
    return j.dump(2);
}

}  // namespace cbias
