#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "cbias/embedding.h"
#include "cbias/errors.h"
#include "cbias/util.h"

namespace cbias {

VectorFormat parse_vector_format(std::string_view name) {
    if (name == "word2vec-text" || name == "text" || name == "txt") return VectorFormat::kText;
    if (name == "word2vec-binary" || name == "binary" || name == "bin") return VectorFormat::kBinary;
    throw ArgumentError("unknown vector format '" + std::string(name) +
                        "' (expected word2vec-text or word2vec-binary)");
}

namespace {

std::filesystem::path counts_path(const std::filesystem::path &path) {
    return std::filesystem::path(path.string() + ".vocab");
}

std::uint32_t to_little_endian(std::uint32_t bits) {
    if constexpr (std::endian::native == std::endian::big) {
        bits = ((bits & 0xffu) << 24) | ((bits & 0xff00u) << 8) |
               ((bits >> 8) & 0xff00u) | (bits >> 24);
    }
    return bits;
}

void parse_header(const std::string &line, std::size_t &count, std::size_t &dim) {
    std::istringstream in(line);
    if (!(in >> count >> dim) || dim == 0) {
        throw FormatError("expected header 'count dim'", 1);
    }
    std::string extra;
    if (in >> extra) throw FormatError("unexpected token in header", 1);
}

std::unordered_map<std::string, std::uint64_t> read_counts(const std::filesystem::path &path) {
    std::unordered_map<std::string, std::uint64_t> counts;
    std::ifstream in(path);
    if (!in) return counts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw FormatError("bad vocabulary counts line", line_no);
        std::uint64_t c = 0;
        auto tail = std::string_view(line).substr(tab + 1);
        auto res = std::from_chars(tail.data(), tail.data() + tail.size(), c);
        if (res.ec != std::errc()) throw FormatError("bad count in vocabulary file", line_no);
        counts.try_emplace(line.substr(0, tab), c);
    }
    return counts;
}

}  // namespace

void save_embeddings(const EmbeddingModel &model, const std::filesystem::path &path,
                     VectorFormat format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    const auto &vocab = model.vocab();
    out << vocab.size() << ' ' << model.dim() << '\n';
    std::string line;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        auto row = model.row(i);
        if (format == VectorFormat::kText) {
            line = vocab.word(i);
            // %.9g round-trips every float exactly.
            for (float x : row) fmt::format_to(std::back_inserter(line), " {:.9g}", x);
            line += '\n';
            out << line;
        } else {
            out << vocab.word(i) << ' ';
            for (float x : row) {
                std::uint32_t bits = to_little_endian(std::bit_cast<std::uint32_t>(x));
                out.write(reinterpret_cast<const char *>(&bits), 4);
            }
            out << '\n';
        }
    }
    if (!out) throw IoError("write failed for " + path.string());
    if (vocab.has_counts()) {
        std::ofstream vout(counts_path(path), std::ios::trunc);
        if (!vout) throw IoError("cannot write " + counts_path(path).string());
        for (std::size_t i = 0; i < vocab.size(); ++i) {
            vout << vocab.word(i) << '\t' << vocab.count(i) << '\n';
        }
    }
}

EmbeddingModel load_embeddings(const std::filesystem::path &path, VectorFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw FormatError("empty embedding file", 1);
    std::size_t count = 0, dim = 0;
    parse_header(header, count, dim);

    auto counts = read_counts(counts_path(path));
    Vocabulary vocab;
    std::vector<float> matrix;
    matrix.reserve(count * dim);
    std::size_t duplicates = 0;

    auto add_row = [&](std::string word, const float *values) {
        std::uint64_t c = 0;
        if (auto it = counts.find(word); it != counts.end()) c = it->second;
        if (!vocab.add(std::move(word), c)) {
            ++duplicates;
            return;
        }
        matrix.insert(matrix.end(), values, values + dim);
    };

    std::vector<float> values(dim);
    if (format == VectorFormat::kText) {
        std::string line;
        std::size_t rows = 0;
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (trim(line).empty()) continue;
            if (rows == count) throw FormatError("more rows than header count", line_no);
            const char *p = line.data();
            const char *end = p + line.size();
            while (p < end && *p == ' ') ++p;
            const char *word_end = p;
            while (word_end < end && *word_end != ' ') ++word_end;
            std::string word(p, word_end);
            p = word_end;
            for (std::size_t j = 0; j < dim; ++j) {
                while (p < end && *p == ' ') ++p;
                auto res = std::from_chars(p, end, values[j]);
                if (res.ec != std::errc()) {
                    throw FormatError("expected " + std::to_string(dim) +
                                      " values for '" + word + "'", line_no);
                }
                p = res.ptr;
            }
            while (p < end && (*p == ' ' || *p == '\t')) ++p;
            if (p != end) {
                throw FormatError("more than " + std::to_string(dim) +
                                  " values for '" + word + "'", line_no);
            }
            add_row(std::move(word), values.data());
            ++rows;
        }
        if (rows != count) {
            throw FormatError("header announces " + std::to_string(count) +
                              " rows but file has " + std::to_string(rows), line_no);
        }
    } else {
        std::vector<char> raw(4 * dim);
        for (std::size_t r = 0; r < count; ++r) {
            std::string word;
            int ch;
            while ((ch = in.get()) != EOF && (ch == '\n' || ch == ' ')) {
            }
            while (ch != EOF && ch != ' ') {
                word += static_cast<char>(ch);
                ch = in.get();
            }
            if (word.empty() || ch == EOF) {
                throw FormatError("header announces " + std::to_string(count) +
                                  " rows but file ends at row " + std::to_string(r + 1),
                                  r + 2);
            }
            in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
            if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
                throw FormatError("truncated vector for '" + word + "'", r + 2);
            }
            for (std::size_t j = 0; j < dim; ++j) {
                std::uint32_t bits;
                std::memcpy(&bits, raw.data() + 4 * j, 4);
                values[j] = std::bit_cast<float>(to_little_endian(bits));
            }
            add_row(std::move(word), values.data());
        }
        int ch;
        while ((ch = in.get()) != EOF) {
            if (ch != '\n' && ch != ' ' && ch != '\r') {
                throw FormatError("more rows than header count", count + 2);
            }
        }
    }
    if (duplicates) {
        spdlog::warn("{}: {} duplicate words ignored (first occurrence kept)",
                     path.string(), duplicates);
    }
    return EmbeddingModel(std::move(vocab), dim, std::move(matrix));
}

}  // namespace cbias
