"""Primal-dual solver and optimality certificates for higher-order differential inclusions."""
