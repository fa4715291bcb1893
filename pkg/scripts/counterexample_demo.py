"""Print the non-shadowing counterexample report."""
from semihorse.shadowspec import counterexample_suite

if __name__ == "__main__":
    print(counterexample_suite().to_text(), end="")
