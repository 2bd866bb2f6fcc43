#pragma once

#include "popsyn/config.hpp"
#include "popsyn/ipf.hpp"
#include "popsyn/population.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace popsyn {

/// Desk-scale ground truth: 4 areas x 5 age groups x 2 race x 3 income x
/// 3 vehicle x 2 gender, households of 1 to 7 members.
struct FixtureSpec {
    std::size_t persons = 50'000; // true population size, met exactly
    double sample_fraction = 0.05;
    /// Per-area inclusion multipliers of the biased sample.
    std::vector<double> area_multipliers{1.5, 1.0, 0.8, 0.8};
    /// Inclusion multiplier for high-income households without a vehicle, a
    /// combination rare in the truth that the sample then almost never holds.
    double rare_multiplier = 0.02;

    /// Throws ArgumentError for a fraction outside (0, 1] or a non-positive multiplier.
    void validate() const;
};

struct Fixture {
    Population truth;
    Population sample;
    std::vector<MarginalConstraint> marginals; // hh_area_size, person_area_age, person_area_race
    PipelineConfig config;                     // paths relative to the fixture directory
};

/// The fixture schema (AREA, HINCP, VEH, AGEP, RACWHT, SEX).
Schema fixture_schema();

/// Draws the truth population, tabulates the census marginals from it and
/// draws the biased household sample. Deterministic in `seed`.
Fixture make_fixture(const FixtureSpec &spec, std::uint64_t seed);

/// Writes truth/, sample/, marginals/ and config.toml under `dir`.
void write_fixture(const std::filesystem::path &dir, const Fixture &fixture);

} // namespace popsyn
