"""train 测试"""
