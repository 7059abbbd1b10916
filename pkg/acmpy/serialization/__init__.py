from .json_codec import *
