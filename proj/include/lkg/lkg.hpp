#pragma once

#include "annotate.hpp"
#include "auc.hpp"
#include "blob.hpp"
#include "casegraph.hpp"
#include "corpus.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "explain.hpp"
#include "gnn.hpp"
#include "matrix.hpp"
#include "porter.hpp"
#include "random.hpp"
#include "service.hpp"
#include "synth.hpp"
#include "text.hpp"
#include "topics.hpp"
