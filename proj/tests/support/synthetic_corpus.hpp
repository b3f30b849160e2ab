#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "devgeo/corpus.hpp"

namespace testsupport {

struct SyntheticPage {
  devgeo::PageRecord record;
  std::string class_label;
};

// `templates` distinct page skeletons (at most 5), `per_template` instances
// each. Every instance rewrites at most `mutation_rate` of its text
// characters. Deterministic for a given seed.
std::vector<SyntheticPage> make_template_corpus(int templates, int per_template, double mutation_rate,
                                                std::uint32_t seed);

// Writes pages plus manifest.jsonl into `dir` (created, previous contents
// removed). With `gold` set, also writes gold.jsonl carrying class labels.
void write_corpus_dir(const std::filesystem::path& dir, const std::vector<SyntheticPage>& pages, bool gold = true);

}  // namespace testsupport
