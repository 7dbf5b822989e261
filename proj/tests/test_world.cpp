#include <gtest/gtest.h>

#include <sstream>

#include "odeen/world.hpp"

using namespace odeen;

TEST(World, DefaultUniverseHas117649Structures) {
  const WorldConfig cfg;
  EXPECT_EQ(cfg.alphabet_size(), 7u);
  EXPECT_EQ(cfg.universe_size(), 117649u);
}

TEST(World, IdRoundTripOverWholeUniverse) {
  const WorldConfig cfg;
  for (std::uint64_t id = 0; id < cfg.universe_size(); ++id) {
    const auto s = structure_from_id(id, cfg);
    ASSERT_EQ(s.id, id);
    ASSERT_EQ(structure_to_id(s, cfg), id);
  }
}

TEST(World, LeftmostCellIsMostSignificant) {
  const WorldConfig cfg;
  const auto s = structure_from_id(1, cfg);
  for (std::size_t i = 0; i + 1 < 6; ++i) EXPECT_TRUE(s.cells[i].is_empty());
  EXPECT_EQ(piece_token(s.cells[5], cfg), "red_block");
  const auto t = structure_from_id(117648, cfg);
  for (const auto& p : t.cells) EXPECT_EQ(piece_token(p, cfg), "blue_pyramid_down");
}

TEST(World, OutOfRangeIdThrows) {
  EXPECT_THROW(structure_from_id(117649, WorldConfig{}), std::out_of_range);
}

TEST(World, PieceCodes) {
  const WorldConfig cfg;
  EXPECT_EQ(Piece::empty().code(cfg), 0u);
  EXPECT_EQ(Piece::occupied(0, 0).code(cfg), 1u);
  EXPECT_EQ(Piece::occupied(1, 2).code(cfg), 6u);
  for (std::uint32_t c = 0; c < 7; ++c) EXPECT_EQ(Piece::from_code(c, cfg).code(cfg), c);
}

TEST(World, TokenRenderingRoundTrips) {
  const WorldConfig cfg;
  for (std::uint64_t id : {0ull, 1ull, 4242ull, 99999ull, 117648ull}) {
    const auto s = structure_from_id(id, cfg);
    const auto text = render_structure(s, cfg);
    EXPECT_EQ(parse_structure(text, cfg).id, id) << text;
  }
  EXPECT_EQ(render_structure(structure_from_id(0, cfg), cfg), "_ _ _ _ _ _");
}

TEST(World, EmojiRenderingRoundTrips) {
  const WorldConfig cfg;
  const auto glyphs = GlyphTable::defaults(cfg);
  for (std::uint64_t id : {0ull, 7ull, 55555ull, 117648ull}) {
    const auto text = render_structure(structure_from_id(id, cfg), cfg, RenderMode::Emoji);
    EXPECT_EQ(parse_structure_glyphs(text, cfg, glyphs).id, id);
  }
}

TEST(World, ParseRejectsBadInput) {
  const WorldConfig cfg;
  EXPECT_THROW(parse_structure("_ _ _", cfg), std::invalid_argument);
  EXPECT_THROW(parse_structure("_ _ _ _ _ green_block", cfg), std::invalid_argument);
}

TEST(World, GlyphTableFromConfigFile) {
  const WorldConfig cfg;
  std::istringstream in("# custom\n0=.\n1=R\n4=B\n");
  const auto t = GlyphTable::parse(in, cfg);
  EXPECT_EQ(t.glyph(0), ".");
  EXPECT_EQ(t.glyph(1), "R");
  EXPECT_EQ(t.glyph(2), "🔺");
  const auto s = parse_structure("_ red_block blue_block _ _ _", cfg);
  EXPECT_EQ(render_structure(s, cfg, RenderMode::Emoji, &t), ".RB...");
  std::istringstream dup("1=x\n2=x\n");
  EXPECT_THROW(GlyphTable::parse(dup, cfg), std::runtime_error);
  std::istringstream bad("9=x\n");
  EXPECT_THROW(GlyphTable::parse(bad, cfg), std::runtime_error);
}

TEST(World, ConfigValidation) {
  WorldConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.length = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.colors = {"red", "red"};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.length = 20;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(World, ParametricConfig) {
  WorldConfig cfg;
  cfg.length = 3;
  cfg.colors = {"red", "blue", "green"};
  EXPECT_EQ(cfg.alphabet_size(), 10u);
  EXPECT_EQ(cfg.universe_size(), 1000u);
  const auto s = parse_structure("green_pyramid_up _ red_block", cfg);
  EXPECT_EQ(structure_from_id(s.id, cfg).id, s.id);
  EXPECT_EQ(render_structure(s, cfg), "green_pyramid_up _ red_block");
}
