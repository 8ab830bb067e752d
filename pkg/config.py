"""Configuration file for the term-structure kernel engine."""
import os

# Tolerances used by identity and property checks
TOLERANCE_CONFIG = {
    'identity': float(os.environ.get('TSK_TOLERANCE', '1e-10')),
    'relative': float(os.environ.get('TSK_RELATIVE_TOLERANCE', '1e-12')),
    'strict_margin': float(os.environ.get('TSK_STRICT_MARGIN', '1e-12')),
    'probability_sum': 1e-12,
    'martingale_generator': 1e-13,
    'martingale_condition': 1e-12,
}

# Branching-process tree guard
BRANCHING_CONFIG = {
    'max_nodes': int(os.environ.get('TSK_MAX_NODES', '100000')),
}

# Output formatting
OUTPUT_CONFIG = {
    'significant_digits': 12,
    'float_format': '%.12g',
    'line_terminator': '\n',
    'json_indent': 2,
}

# Column orders are part of the CSV contract
CSV_COLUMNS = {
    'curve': ['time_i', 'time_j', 'node', 'P', 'R'],
    'price': ['depth', 'node', 'value', 'transversality', 'flag'],
    'process': ['depth', 'node', 'value'],
}

# Labels written into price exports
PRICE_FLAGS = {
    'bubble': 'BUBBLE',
    'fundamental': 'FUNDAMENTAL',
}

# PDF Report Settings
PDF_CONFIG = {
    'page_size': 'A4',
    'margin': 30,  # points
    'font_size': {
        'title': 20,
        'heading': 14,
        'body': 9
    },
    'colors': {
        'title': '#1D5B79',
        'header_bg': '#2a3f5f',
        'pass': '#2E8B57',
        'fail': '#EF6262',
    },
    'max_rows_per_page': 30
}
