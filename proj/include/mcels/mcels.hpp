#pragma once

#include "adam.hpp"
#include "checkpoint.hpp"
#include "classifier.hpp"
#include "data.hpp"
#include "error.hpp"
#include "explainer.hpp"
#include "metrics.hpp"
#include "nun.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "report.hpp"
#include "result_json.hpp"
#include "series.hpp"
#include "synthetic.hpp"
