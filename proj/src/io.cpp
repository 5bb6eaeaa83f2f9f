#include "rhm/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rhm/error.hpp"

namespace rhm {
namespace {

using nlohmann::json;

constexpr char kBinaryMagic[5] = {'R', 'H', 'M', 'D', '1'};

void PutU64(std::string& out, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

std::uint64_t GetU64(const std::string& in, std::size_t& pos) {
  Require(pos + 8 <= in.size(), ErrorCode::kIo, "truncated binary dataset");
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) {
    x |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += 8;
  return x;
}

std::uint64_t ParseHashHex(const std::string& hex) {
  std::uint64_t h = 0;
  auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), h, 16);
  Require(ec == std::errc() && ptr == hex.data() + hex.size(), ErrorCode::kIo,
          "malformed hash '" + hex + "'");
  return h;
}

std::istringstream OpenLines(const std::filesystem::path& path) {
  return std::istringstream(ReadFile(path));
}

struct TextHeader {
  std::size_t length = 0;
  int vocab = 0;
  std::size_t rows = 0;
  std::uint64_t hash = 0;
};

TextHeader ParseHeader(const std::string& line) {
  std::istringstream hs(line);
  TextHeader h;
  std::string hash;
  Require(static_cast<bool>(hs >> h.length >> h.vocab >> h.rows >> hash),
          ErrorCode::kIo, "malformed dataset header '" + line + "'");
  h.hash = ParseHashHex(hash);
  return h;
}

std::string HeaderLine(std::size_t length, int vocab, std::size_t rows,
                       std::uint64_t hash) {
  return std::to_string(length) + ' ' + std::to_string(vocab) + ' ' +
         std::to_string(rows) + ' ' + HashHex(hash) + '\n';
}

}  // namespace

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), ErrorCode::kIo,
          "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(static_cast<bool>(out), ErrorCode::kIo,
          "cannot open '" + path.string() + "' for writing");
  out << content;
  Require(static_cast<bool>(out), ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

std::string HashHex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::string FormatDouble(double x) {
  char buf[64];
  auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

std::string GrammarToJson(const RuleSet& rules) {
  const auto& p = rules.params();
  json j;
  j["params"] = {{"L", p.depth},
                 {"s", p.branching},
                 {"v", p.vocab},
                 {"m", p.synonyms},
                 {"seed", p.seed}};
  j["rules"] = rules.Tables();
  j["hash"] = HashHex(rules.Hash());
  return j.dump(1) + '\n';
}

RuleSet GrammarFromJson(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kIo, std::string("grammar file is not valid JSON: ") + e.what());
  }
  try {
    GrammarParams p;
    const auto& jp = j.at("params");
    p.depth = jp.at("L").get<int>();
    p.branching = jp.at("s").get<int>();
    p.vocab = jp.at("v").get<int>();
    p.synonyms = jp.at("m").get<int>();
    p.seed = jp.value("seed", std::uint64_t{0});
    auto tables =
        j.at("rules").get<std::vector<std::vector<std::vector<std::vector<Symbol>>>>>();
    RuleSet rs = RuleSet::FromTables(p, tables);
    if (j.contains("hash")) {
      Require(ParseHashHex(j.at("hash").get<std::string>()) == rs.Hash(),
              ErrorCode::kIo, "grammar hash does not match its content");
    }
    return rs;
  } catch (const json::exception& e) {
    Fail(ErrorCode::kIo, std::string("malformed grammar file: ") + e.what());
  }
}

void WriteGrammar(const std::filesystem::path& path, const RuleSet& rules) {
  WriteFile(path, GrammarToJson(rules));
}

RuleSet ReadGrammar(const std::filesystem::path& path) {
  return GrammarFromJson(ReadFile(path));
}

void WriteDatasetText(const std::filesystem::path& path, const Dataset& data) {
  std::string out = HeaderLine(data.length, data.vocab, data.rows(), data.grammar_hash);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    auto row = data.Row(i);
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out += ' ';
      out += std::to_string(row[k]);
    }
    out += '\n';
  }
  WriteFile(path, out);
}

void WriteDatasetBinary(const std::filesystem::path& path, const Dataset& data) {
  std::string out(kBinaryMagic, sizeof kBinaryMagic);
  PutU64(out, data.length);
  PutU64(out, static_cast<std::uint64_t>(data.vocab));
  PutU64(out, data.rows());
  PutU64(out, data.grammar_hash);
  for (Symbol t : data.tokens) {
    const auto u = static_cast<std::uint32_t>(t);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
  }
  WriteFile(path, out);
}

Dataset ReadDataset(const std::filesystem::path& path) {
  const std::string raw = ReadFile(path);
  Dataset data;
  if (raw.size() >= sizeof kBinaryMagic &&
      std::memcmp(raw.data(), kBinaryMagic, sizeof kBinaryMagic) == 0) {
    std::size_t pos = sizeof kBinaryMagic;
    data.length = GetU64(raw, pos);
    data.vocab = static_cast<int>(GetU64(raw, pos));
    const std::size_t rows = GetU64(raw, pos);
    data.grammar_hash = GetU64(raw, pos);
    Require(raw.size() == pos + rows * data.length * 4, ErrorCode::kIo,
            "binary dataset size does not match its header");
    data.tokens.resize(rows * data.length);
    for (auto& t : data.tokens) {
      std::uint32_t u = 0;
      for (int i = 0; i < 4; ++i) {
        u |= static_cast<std::uint32_t>(static_cast<unsigned char>(raw[pos++])) << (8 * i);
      }
      t = static_cast<Symbol>(u);
    }
  } else {
    std::istringstream in(raw);
    std::string line;
    Require(static_cast<bool>(std::getline(in, line)), ErrorCode::kIo,
            "empty dataset file '" + path.string() + "'");
    const TextHeader h = ParseHeader(line);
    data.length = h.length;
    data.vocab = h.vocab;
    data.grammar_hash = h.hash;
    data.tokens.reserve(h.rows * h.length);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::size_t count = 0;
      long long t;
      while (ls >> t) {
        data.tokens.push_back(static_cast<Symbol>(t));
        ++count;
      }
      Require(ls.eof() && count == h.length, ErrorCode::kIo,
              "dataset row " + std::to_string(rows) + " is malformed");
      ++rows;
    }
    Require(rows == h.rows, ErrorCode::kIo, "dataset row count does not match header");
  }
  for (Symbol t : data.tokens) {
    Require(t >= 0 && t < data.vocab, ErrorCode::kIo, "dataset token out of range");
  }
  return data;
}

std::string FormatNoisyRow(std::span<const Symbol> row, int vocab) {
  std::string out;
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (k) out += ' ';
    out += row[k] == vocab ? std::string("?") : std::to_string(row[k]);
  }
  return out;
}

std::vector<Symbol> ParseNoisyRow(const std::string& line, int vocab) {
  std::istringstream ls(line);
  std::vector<Symbol> out;
  std::string tok;
  while (ls >> tok) {
    if (tok == "?") {
      out.push_back(vocab);
      continue;
    }
    long long t = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), t);
    Require(ec == std::errc() && ptr == tok.data() + tok.size(),
            ErrorCode::kInvalidArgument, "bad token '" + tok + "'");
    Require(t >= 0 && t < vocab, ErrorCode::kInvalidArgument,
            "token " + tok + " out of range for v = " + std::to_string(vocab));
    out.push_back(static_cast<Symbol>(t));
  }
  return out;
}

void WriteNoisyText(const std::filesystem::path& path, std::size_t length,
                    int vocab, std::uint64_t grammar_hash,
                    const std::vector<Symbol>& tokens) {
  const std::size_t rows = length ? tokens.size() / length : 0;
  std::string out = HeaderLine(length, vocab, rows, grammar_hash);
  for (std::size_t i = 0; i < rows; ++i) {
    out += FormatNoisyRow(std::span<const Symbol>(tokens.data() + i * length, length),
                          vocab);
    out += '\n';
  }
  WriteFile(path, out);
}

std::vector<Symbol> ReadNoisyText(const std::filesystem::path& path,
                                  std::size_t& length, int vocab) {
  auto in = OpenLines(path);
  std::string line;
  Require(static_cast<bool>(std::getline(in, line)), ErrorCode::kIo,
          "empty noisy dataset '" + path.string() + "'");
  const TextHeader h = ParseHeader(line);
  Require(h.vocab == vocab, ErrorCode::kInvalidArgument,
          "noisy dataset vocabulary does not match the grammar");
  length = h.length;
  std::vector<Symbol> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = ParseNoisyRow(line, vocab);
    Require(row.size() == length, ErrorCode::kIo, "noisy row has the wrong length");
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

}  // namespace rhm
