#pragma once

#include "errors.hpp"
#include "code.hpp"
#include "chunk_lut.hpp"
#include "topk.hpp"
#include "bucket_enum.hpp"
#include "bucket_table.hpp"
#include "single_index.hpp"
#include "multi_index.hpp"
#include "baselines.hpp"
#include "dataset_io.hpp"
#include "eval.hpp"
#include "verify.hpp"
