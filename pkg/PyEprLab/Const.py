"""PyEprLab Constants"""
import math

# Criterion thresholds (hbar = 1)
PARADOX_THRESHOLD = 0.25
INSEPARABILITY_THRESHOLD = 1.0
DUAN_THRESHOLD = 2.0

# Table 1 "Spin wave - S1 photon" (before storage)
TABLE1_ROW1_LABEL = 'Spin wave - S1 photon'
TABLE1_ROW1_VAR_P_PLUS = 0.807
TABLE1_ROW1_ERR_P = 0.163
TABLE1_ROW1_VAR_X_MINUS = 0.230
TABLE1_ROW1_ERR_X = 0.021
TABLE1_ROW1_PRODUCT = 0.186
TABLE1_ROW1_PRODUCT_ERR = 0.041

# Table 1 "Spin wave - spin wave" (after storage)
TABLE1_ROW2_LABEL = 'Spin wave - spin wave'
TABLE1_ROW2_VAR_P_PLUS = 1.439
TABLE1_ROW2_ERR_P = 0.214
TABLE1_ROW2_VAR_X_MINUS = 0.332
TABLE1_ROW2_ERR_X = 0.026
TABLE1_ROW2_PRODUCT = 0.478
TABLE1_ROW2_PRODUCT_ERR = 0.080

# Effective double slit and detectors (mm)
BAR_WIDTH_MM = 1.04
MODE_WAIST_MM = 1.1
SLIT_WIDTH_MM = 0.4
FIBER_WAIST_MM = 0.0025

# Optics
WAVELENGTH_NM = 795.0
F1_MM = 500.0
F2_MM = 32.0
FC_MM = 11.07
MAGNIFICATION_IMAGING_ARM = 1.0
NM_PER_MM = 1.0e6

# Count budgets and accumulation times
IMAGE_PEAK_COUNTS = 252.0
INTERFERENCE_PEAK_COUNTS = 344.0
IMAGE_PEAK_COUNTS_STORED = 219.0
INTERFERENCE_PEAK_COUNTS_STORED = 290.0
IMAGE_DURATION_S = 1000.0
INTERFERENCE_DURATION_S = 200.0
IMAGE_DURATION_S_STORED = 3000.0
INTERFERENCE_DURATION_S_STORED = 500.0
SIGNAL_TO_NOISE = 30.0
STORAGE_EFFICIENCY = 0.25

# Scan geometry
IMAGE_STEP_MM = 0.1
IMAGE_SCAN_HALF_RANGE_MM = 2.0
INTERFERENCE_STEP_MM = 0.002
INTERFERENCE_SCAN_HALF_RANGE_MM = 0.04
IMAGE_GRID_HALF_WIDTH_MM = 8.0
INTERFERENCE_GRID_HALF_WIDTH_MM = 0.1
GRID_POINTS = 4097

# Numerics
WINDOW_WAISTS = 6.0
MIN_POINTS_ACROSS_BAR = 16
QUADRATURE_NODES = 512
QUADRATURE_TOLERANCE = 1.0e-4
MIN_SCAN_POINTS = 8
FIT_FTOL = 1.0e-10
FIT_POLISH_TOL = 1.0e-15
FIT_MAX_ITERATIONS = 200
MC_CHUNK_SIZE = 100000

DEFAULT_SEED = 20190527

TWO_PI = 2.0 * math.pi

# Measurement arms
ARM_IMAGE = 0
ARM_INTERFERENCE = 1

ARM_STR = {
    ARM_IMAGE : 'image',
    ARM_INTERFERENCE : 'interference',
    }

ARM_FROM_STR = {value : key for key, value in ARM_STR.items()}

# Curve normalizations
NORMALIZATION_MAX = 'max'
NORMALIZATION_AREA = 'area'
NORMALIZATION_NONE = 'none'
