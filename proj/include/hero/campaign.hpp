#pragma once

#include <filesystem>

#include "hero/campaign/config.hpp"
#include "hero/campaign/manifest.hpp"
#include "hero/campaign/stages.hpp"

namespace hero::campaign {

/// Every stage in pipeline order, starting from an empty manifest.
inline json run_campaign(const Context& ctx) {
  ctx.manifest().reset();
  std::filesystem::remove(ctx.path(artifact::kTiming));
  stage_preprocess(ctx);
  stage_train(ctx);
  stage_encode(ctx);
  stage_select(ctx);
  stage_attack(ctx);
  stage_compare(ctx);
  return stage_report(ctx);
}

}  // namespace hero::campaign
