#pragma once

#include "stagecause/convert.hpp"
#include "stagecause/dataset.hpp"
#include "stagecause/experiment.hpp"
#include "stagecause/graph.hpp"
#include "stagecause/io.hpp"
#include "stagecause/metrics.hpp"
#include "stagecause/model.hpp"
#include "stagecause/order_search.hpp"
#include "stagecause/parallel.hpp"
#include "stagecause/probability.hpp"
#include "stagecause/randgen.hpp"
#include "stagecause/rng.hpp"
#include "stagecause/staging_search.hpp"
