#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rhm/grammar.hpp"

namespace rhm {

// Grammar file: {"params": {...}, "rules": [level][symbol][rule][child],
// "hash": "<16 hex digits>"}. rules[0] holds the level-1 productions (those
// emitting visible tokens); rules[L-1] holds the root productions.
std::string GrammarToJson(const RuleSet& rules);
RuleSet GrammarFromJson(const std::string& text);
void WriteGrammar(const std::filesystem::path& path, const RuleSet& rules);
RuleSet ReadGrammar(const std::filesystem::path& path);

std::string HashHex(std::uint64_t hash);

// Text dataset: header "d v P hash" then one row of space-separated tokens
// per line. Binary dataset: "RHMD1" magic, then little-endian u64 d, v, P,
// hash and P*d u32 tokens. Latents are not serialized.
void WriteDatasetText(const std::filesystem::path& path, const Dataset& data);
void WriteDatasetBinary(const std::filesystem::path& path, const Dataset& data);
// Detects the layout from the leading bytes.
Dataset ReadDataset(const std::filesystem::path& path);

// Noisy sequences use "?" for the mask id (v). Rows of a noisy file keep the
// text dataset header.
std::string FormatNoisyRow(std::span<const Symbol> row, int vocab);
std::vector<Symbol> ParseNoisyRow(const std::string& line, int vocab);
void WriteNoisyText(const std::filesystem::path& path, std::size_t length,
                    int vocab, std::uint64_t grammar_hash,
                    const std::vector<Symbol>& tokens);
// Returns the rows (flat) of a noisy text file; `length` receives d.
std::vector<Symbol> ReadNoisyText(const std::filesystem::path& path,
                                  std::size_t& length, int vocab);

// 17 significant digits, so every value round-trips exactly.
std::string FormatDouble(double x);

std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, const std::string& content);

}  // namespace rhm
