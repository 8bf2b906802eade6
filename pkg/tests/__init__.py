# Tests for prolate spectrum
