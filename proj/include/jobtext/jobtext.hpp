#pragma once

#include "jobtext/aggregate.hpp"
#include "jobtext/corpus.hpp"
#include "jobtext/csv.hpp"
#include "jobtext/embed_store.hpp"
#include "jobtext/error.hpp"
#include "jobtext/firm_match.hpp"
#include "jobtext/job_tag.hpp"
#include "jobtext/knowledge_map.hpp"
#include "jobtext/month.hpp"
#include "jobtext/parallel.hpp"
#include "jobtext/stage_pipeline.hpp"
#include "jobtext/text.hpp"
#include "jobtext/title_match.hpp"
#include "jobtext/validate.hpp"
#include "jobtext/wage_extract.hpp"
