#pragma once

#include "factcache/assets.hpp"
#include "factcache/config.hpp"
#include "factcache/dataset.hpp"
#include "factcache/error.hpp"
#include "factcache/eval.hpp"
#include "factcache/fact_cache.hpp"
#include "factcache/http.hpp"
#include "factcache/kb_client.hpp"
#include "factcache/knowledge_model.hpp"
#include "factcache/metrics.hpp"
#include "factcache/model_client.hpp"
#include "factcache/pipeline.hpp"
#include "factcache/prompts.hpp"
#include "factcache/slow_source.hpp"
#include "factcache/synthetic.hpp"
#include "factcache/text.hpp"
