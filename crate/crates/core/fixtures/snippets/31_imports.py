import math
import os, sys
from collections import Counter
