import toyflow as tf

class Model(tf.Module):
    def forward(self, a, b):
        return tf.matmul(a, b)

a = tf.rand(2, 10)
b = tf.rand(2, 10)
inputs = [a, b]
