from .csvout import (
    marginal_rows,
    metadata_lines,
    pattern_rows,
    read_count_csv,
    render_csv,
    write_csv,
    write_jsonl,
)
