# iqrewrite test suite
